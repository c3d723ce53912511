#include "hil/cli.hpp"

#include "hil/config.hpp"
#include "hil/harness.hpp"
#include "hil/report.hpp"
#include "hil/simworld.hpp"
#include "hil/vision.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

namespace hil::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::string manifest_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string transport;
    std::string device;
    int baud = 0;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config_path, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Master seed; overrides the config");
    cmd->add_option("--transport", c.transport, "Byte transport")
        ->check(CLI::IsMember({"inproc", "tcp", "serial"}));
    cmd->add_option("--device", c.device, "Serial device path");
    cmd->add_option("--baud", c.baud, "Serial baud rate");
}

void configure_logging()
{
    auto logger = spdlog::stderr_color_mt("hil");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("HIL_LOG"))
        spdlog::set_level(spdlog::level::from_str(env));
}

harness::TrialConfig resolve_config(const Common& c, int* n_from_manifest = nullptr)
{
    harness::TrialConfig config;
    if (!c.manifest_path.empty()) {
        if (!c.config_path.empty())
            throw config::ConfigError("--config and --from-manifest are mutually exclusive");
        const auto m = report::load_manifest(c.manifest_path);
        config = config::from_json(m.config);
        config.seed = m.master_seed;
        if (n_from_manifest)
            *n_from_manifest = m.n_trials;
    } else if (!c.config_path.empty()) {
        config = config::load(c.config_path);
    }
    if (c.seed)
        config.seed = *c.seed;
    if (!c.transport.empty())
        config.transport.kind = transport::parse_kind(c.transport);
    if (!c.device.empty())
        config.transport.device = c.device;
    if (c.baud > 0)
        config.transport.baud = c.baud;
    return config;
}

std::string frame_name(int index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d.pgm", index);
    return buf;
}

int cmd_trial(const Common& c, bool dump_frames, bool trajectory)
{
    auto config = resolve_config(c);
    config.record_trajectory = config.record_trajectory || trajectory;
    if (dump_frames && c.out.empty())
        throw config::ConfigError("--dump-frames needs --out");

    harness::FrameSink sink;
    if (dump_frames) {
        fs::create_directories(fs::path(c.out) / "frames");
        sink = [dir = fs::path(c.out) / "frames"](int i, const GrayFrame& f) { write_pgm(dir / frame_name(i), f); };
    }

    spdlog::info("trial seed {} transport {}", config.seed, transport::to_string(config.transport.kind));
    const auto result = harness::run_trial(config, sink);
    const auto json = report::to_json(result).dump(2) + "\n";

    if (c.out.empty()) {
        std::cout << json;
    } else {
        const fs::path dir(c.out);
        report::write_text(dir / "trial.json", json);
        report::RunManifest m;
        m.command = "trial";
        m.config = config::to_json(config);
        m.master_seed = config.seed;
        m.n_trials = 1;
        m.artifacts = {{"result", "trial.json"}};
        if (dump_frames)
            m.artifacts["frames"] = "frames/";
        report::write_text(dir / report::manifest_file, report::to_json(m).dump(2) + "\n");
    }
    std::fprintf(stderr, "%s after %.2f s, final error x=%.3f m y=%.3f m theta=%.3f rad\n",
                 std::string(harness::to_string(result.outcome)).c_str(), result.duration, result.final_err_x,
                 result.final_err_y, result.final_err_theta);
    return result.success() ? ok : experiment_failure;
}

int cmd_campaign(const Common& c, std::optional<int> n_flag, int jobs)
{
    int n = 0;
    auto config = resolve_config(c, &n);
    if (n_flag)
        n = *n_flag;
    if (n < 1)
        throw CLI::ValidationError("--n", "campaign needs --n >= 1");
    if (c.out.empty())
        throw CLI::ValidationError("--out", "campaign needs an output directory");

    spdlog::info("campaign of {} trials from seed {} on {} worker(s)", n, config.seed, jobs);
    const auto rep = harness::run_campaign(config, n, jobs, [n](int i, const harness::TrialResult& r) {
        spdlog::info("trial {}/{} seed {}: {} in {:.2f} s", i + 1, n, r.seed, harness::to_string(r.outcome),
                     r.duration);
    });

    report::RunManifest m;
    m.command = "campaign";
    m.config = config::to_json(config);
    m.master_seed = config.seed;
    m.n_trials = n;
    report::write_campaign(c.out, rep, std::move(m));

    std::cout << report::table_endings(rep) << "\n" << report::table_precision(rep) << "\n" << report::table_time(rep);
    return rep.success_count == rep.n_trials ? ok : experiment_failure;
}

struct RenderArgs {
    double north = 0.0, east = 0.0, alt = 7.0, yaw = 0.0;
    std::string out;
    bool overlay = false;
};

int cmd_render(const Common& c, const RenderArgs& a)
{
    const auto config = resolve_config(c);
    if (!(a.alt > sim::min_render_altitude))
        throw std::invalid_argument("altitude must exceed 0.05 m");
    sim::DroneState s;
    s.north = a.north;
    s.east = a.east;
    s.down = -a.alt;
    s.yaw = a.yaw;
    GrayFrame frame = sim::render_camera(s, config.camera, config.marker, config.luminance);
    if (a.overlay) {
        const auto det = vision::detect_detailed(frame, a.alt, config.camera, config.marker, config.vision);
        vision::draw_overlay(frame, det);
        if (det.pose)
            std::fprintf(stderr, "pose u=%.2f v=%.2f theta=%.4f rad\n", det.pose->x_px, det.pose->y_px,
                         det.pose->theta);
        else
            std::fprintf(stderr, "no marker detected\n");
    }
    write_image(a.out, frame);
    return ok;
}

}  // namespace

int run(int argc, char** argv)
{
    CLI::App app{"Software hardware-in-the-loop landing simulator"};
    app.require_subcommand(1);

    Common common;
    bool dump_frames = false, trajectory = false;
    std::optional<int> n;
    int jobs = 1;
    RenderArgs render;

    auto* trial = app.add_subcommand("trial", "Run one landing");
    add_common(trial, common);
    trial->add_option("--out", common.out, "Output directory (JSON to stdout when omitted)");
    trial->add_option("--from-manifest", common.manifest_path, "Repeat the run a manifest describes")
        ->check(CLI::ExistingFile);
    trial->add_flag("--dump-frames", dump_frames, "Write every rendered frame as PGM");
    trial->add_flag("--trajectory", trajectory, "Record the sampled state log");

    auto* campaign = app.add_subcommand("campaign", "Run a Monte-Carlo campaign");
    add_common(campaign, common);
    campaign->add_option("--n", n, "Number of trials")->check(CLI::Range(1, 1'000'000));
    campaign->add_option("--out", common.out, "Output directory")->required();
    campaign->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 256));
    campaign->add_option("--from-manifest", common.manifest_path, "Repeat the run a manifest describes")
        ->check(CLI::ExistingFile);

    auto* rend = app.add_subcommand("render", "Render one camera frame");
    rend->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    rend->add_option("--north", render.north, "Drone north [m]");
    rend->add_option("--east", render.east, "Drone east [m]");
    rend->add_option("--alt", render.alt, "Drone altitude [m]");
    rend->add_option("--yaw", render.yaw, "Drone yaw [rad]");
    rend->add_option("--out", render.out, "Output .pgm or .png")->required();
    rend->add_flag("--overlay", render.overlay, "Draw the detection overlay");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : operational_error;
    }

    try {
        configure_logging();
    } catch (const spdlog::spdlog_ex&) {
        // logger already registered when run() is called more than once in a process
    }

    try {
        if (trial->parsed())
            return cmd_trial(common, dump_frames, trajectory);
        if (campaign->parsed()) {
            if (!n && common.manifest_path.empty())
                throw CLI::ValidationError("--n", "campaign needs --n or --from-manifest");
            return cmd_campaign(common, n, jobs);
        }
        return cmd_render(common, render);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return operational_error;
    }
}

}  // namespace hil::cli
