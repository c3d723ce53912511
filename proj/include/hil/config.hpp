#pragma once

#include "hil/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>

namespace hil::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every parameter block as one JSON tree. Round-trips through from_json.
nlohmann::json to_json(const harness::TrialConfig& config);

/// Strict: unknown keys, wrong types and invalid values are errors. Missing
/// keys keep their defaults. Gains must be strictly positive here.
harness::TrialConfig from_json(const nlohmann::json& j);

harness::TrialConfig load(const std::filesystem::path& path);
void save(const std::filesystem::path& path, const harness::TrialConfig& config);

}  // namespace hil::config
