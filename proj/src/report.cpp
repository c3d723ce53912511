#include "hil/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hil::report {

using nlohmann::json;

namespace {

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string fixed(double v, int digits)
{
    if (!std::isfinite(v))
        return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Columns separated by " | " with every cell padded to its column width.
std::string render_table(const std::vector<std::vector<std::string>>& rows)
{
    std::vector<std::size_t> width;
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (width.size() <= c)
                width.push_back(0);
            width[c] = std::max(width[c], row[c].size());
        }
    std::string rule = "+";
    for (auto w : width)
        rule += std::string(w + 2, '-') + "+";
    rule += "\n";

    std::string out = rule;
    for (const auto& row : rows) {
        out += "|";
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < row.size() ? row[c] : "";
            out += " " + cell + std::string(width[c] - cell.size(), ' ') + " |";
        }
        out += "\n" + rule;
    }
    return out;
}

json state_json(const sim::DroneState& s)
{
    return {{"north", s.north}, {"east", s.east}, {"altitude", s.altitude()}, {"yaw", s.yaw}};
}

}  // namespace

json to_json(const harness::TrialResult& r)
{
    json j = {
        {"seed", r.seed},
        {"outcome", std::string(harness::to_string(r.outcome))},
        {"detail", r.detail},
        {"start", state_json(r.start)},
        {"final_err_x", r.final_err_x},
        {"final_err_y", r.final_err_y},
        {"final_err_theta", r.final_err_theta},
        {"duration", r.duration},
        {"frames", r.frames},
    };
    if (!r.trajectory.empty()) {
        json traj = json::array();
        for (const auto& s : r.trajectory)
            traj.push_back({s.t, s.north, s.east, s.altitude, s.yaw});
        j["trajectory"] = {{"columns", {"t", "north", "east", "altitude", "yaw"}}, {"samples", std::move(traj)}};
    }
    return j;
}

json to_json(const harness::CampaignReport& rep)
{
    json endings = json::object();
    for (auto o : {harness::Outcome::Success, harness::Outcome::MarkerLost, harness::Outcome::Timeout,
                   harness::Outcome::TransportError})
        endings[std::string(harness::to_string(o))] = 0;
    json trials = json::array();
    for (const auto& t : rep.trials) {
        endings[std::string(harness::to_string(t.outcome))] =
            endings[std::string(harness::to_string(t.outcome))].get<int>() + 1;
        trials.push_back(to_json(t));
    }
    return {
        {"master_seed", rep.master_seed},
        {"n_trials", rep.n_trials},
        {"success_count", rep.success_count},
        {"success_pct", rep.success_pct},
        {"endings", std::move(endings)},
        {"mse_x", number_or_null(rep.mse_x)},
        {"mse_y", number_or_null(rep.mse_y)},
        {"mse_theta", number_or_null(rep.mse_theta)},
        {"time",
         {{"mean", number_or_null(rep.time.mean)},
          {"median", number_or_null(rep.time.median)},
          {"max", number_or_null(rep.time.max)},
          {"min", number_or_null(rep.time.min)}}},
        {"trials", std::move(trials)},
    };
}

std::string table_endings(const harness::CampaignReport& rep)
{
    const int failures = rep.n_trials - rep.success_count;
    const double fail_pct = rep.n_trials > 0 ? 100.0 * failures / rep.n_trials : 0.0;
    return render_table({
        {"Ending type", "Quantity", "Percentage [%]"},
        {"Success", std::to_string(rep.success_count), fixed(rep.success_pct, 0)},
        {"Failure", std::to_string(failures), fixed(fail_pct, 0)},
    });
}

std::string table_precision(const harness::CampaignReport& rep)
{
    return render_table({
        {"", "MSE"},
        {"x [m]", fixed(rep.mse_x, 4)},
        {"y [m]", fixed(rep.mse_y, 4)},
        {"theta [rad]", fixed(rep.mse_theta, 4)},
    });
}

std::string table_time(const harness::CampaignReport& rep)
{
    return render_table({
        {"Average [s]", "Median [s]", "Maximum [s]", "Minimum [s]"},
        {fixed(rep.time.mean, 2), fixed(rep.time.median, 2), fixed(rep.time.max, 2), fixed(rep.time.min, 2)},
    });
}

std::string start_points_csv(const harness::CampaignReport& rep)
{
    std::string out = "seed,north,east,altitude,yaw,outcome\n";
    char buf[160];
    for (const auto& t : rep.trials) {
        std::snprintf(buf, sizeof buf, "%llu,%.6f,%.6f,%.6f,%.6f,", static_cast<unsigned long long>(t.seed),
                      t.start.north, t.start.east, t.start.altitude(), t.start.yaw);
        out += buf;
        out += harness::to_string(t.outcome);
        out += "\n";
    }
    return out;
}

json to_json(const RunManifest& m)
{
    return {
        {"tool", "hil"},
        {"version", m.version},
        {"command", m.command},
        {"master_seed", m.master_seed},
        {"n_trials", m.n_trials},
        {"artifacts", m.artifacts},
        {"config", m.config},
    };
}

RunManifest manifest_from_json(const json& j)
{
    try {
        RunManifest m;
        m.version = j.at("version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.n_trials = j.at("n_trials").get<int>();
        m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
        m.config = j.at("config");
        return m;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed manifest: ") + e.what());
    }
}

RunManifest load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open manifest " + path.string());
    try {
        return manifest_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("cannot parse manifest " + path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

void write_campaign(const std::filesystem::path& dir, const harness::CampaignReport& report, RunManifest manifest)
{
    manifest.artifacts = {
        {"report", "report.json"},
        {"table_endings", "table_endings.txt"},
        {"table_precision", "table_precision.txt"},
        {"table_time", "table_time.txt"},
        {"start_points", "start_points.csv"},
    };
    write_text(dir / "report.json", to_json(report).dump(2) + "\n");
    write_text(dir / "table_endings.txt", table_endings(report));
    write_text(dir / "table_precision.txt", table_precision(report));
    write_text(dir / "table_time.txt", table_time(report));
    write_text(dir / "start_points.csv", start_points_csv(report));
    write_text(dir / manifest_file, to_json(manifest).dump(2) + "\n");
}

}  // namespace hil::report
