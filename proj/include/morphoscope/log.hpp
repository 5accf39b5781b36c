#pragma once

#include <string>

namespace morphoscope {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold comes from MORPHOSCOPE_LOG={error,warn,info,debug}; default warn.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_message(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_message(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::debug, msg); }

}  // namespace morphoscope
