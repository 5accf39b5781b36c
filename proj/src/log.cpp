#include "morphoscope/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace morphoscope {

namespace {

LogLevel parse_env_level() {
  const char* env = std::getenv("MORPHOSCOPE_LOG");
  if (env == nullptr) return LogLevel::warn;
  if (std::strcmp(env, "error") == 0) return LogLevel::error;
  if (std::strcmp(env, "warn") == 0) return LogLevel::warn;
  if (std::strcmp(env, "info") == 0) return LogLevel::info;
  if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
  return LogLevel::warn;
}

LogLevel& level_ref() {
  static LogLevel level = parse_env_level();
  return level;
}

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::error: return "error";
    case LogLevel::warn: return "warn";
    case LogLevel::info: return "info";
    case LogLevel::debug: return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_level() { return level_ref(); }

void set_log_level(LogLevel level) { level_ref() = level; }

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(level_ref())) return;
  std::fprintf(stderr, "[morphoscope %s] %s\n", level_name(level), msg.c_str());
}

}  // namespace morphoscope
