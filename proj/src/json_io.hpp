#pragma once

// JSON conversions shared by report.cpp and config.cpp. Not installed.

#include <json.hpp>

#include "cryptodiv/experiments.hpp"

namespace cryptodiv {

using nlohmann::json;

json to_json(const FeatureSampling& s);
FeatureSampling sampling_from_json(const json& j);
json to_json(const EnsembleParams& p);
EnsembleParams params_from_json(const json& j);
json to_json(const LogRecord& r);
LogRecord log_from_json(const json& j);
json to_json(const ImportanceReport& r);

} // namespace cryptodiv
