#pragma once

#include "hil/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace hil::report {

inline constexpr const char* tool_version = "1.0.0";

nlohmann::json to_json(const harness::TrialResult& result);
nlohmann::json to_json(const harness::CampaignReport& report);

/// Plain-text tables: ending types, landing precision (RMS x, y, theta) and
/// completion time statistics.
std::string table_endings(const harness::CampaignReport& report);
std::string table_precision(const harness::CampaignReport& report);
std::string table_time(const harness::CampaignReport& report);

/// One row per trial: seed, start position and yaw relative to the marker,
/// outcome.
std::string start_points_csv(const harness::CampaignReport& report);

/// Everything needed to repeat a run. Holds no wall-clock data so that two
/// identical runs write identical manifests.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t master_seed = 0;
    int n_trials = 1;
    std::map<std::string, std::string> artifacts;  // role -> file name in the output directory
    std::string version = tool_version;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);
RunManifest load_manifest(const std::filesystem::path& path);

inline constexpr const char* manifest_file = "manifest.json";

/// Writes text exactly, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Report JSON, three tables, start-point CSV and the manifest.
void write_campaign(const std::filesystem::path& dir, const harness::CampaignReport& report,
                    RunManifest manifest);

}  // namespace hil::report
