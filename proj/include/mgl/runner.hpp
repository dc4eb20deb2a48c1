#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace mgl {

// Config-driven entry points shared by the C API and the CLI. Config keys are
// the CLI flag names without dashes ("ref-mult", "noise-sigma", ...). When
// "out" is present the experiment writes its files there and the returned
// document lists them under "files".
std::vector<std::string> experiment_names();
nlohmann::json run_experiment(const std::string& name, const nlohmann::json& config);

}  // namespace mgl
