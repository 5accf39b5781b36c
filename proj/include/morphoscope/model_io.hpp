#pragma once

#include <string>

#include "morphoscope/probe.hpp"

namespace morphoscope {

// JSON persistence of a fitted probe (format_version 1). Covariances are
// stored as row-major flat arrays; numbers round-trip to the same double.
void save_model(const ProbeModel& model, const std::string& path);
ProbeModel load_model(const std::string& path);

std::string model_to_json_text(const ProbeModel& model);
ProbeModel model_from_json_text(const std::string& text);

}  // namespace morphoscope
