// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "hil/config.hpp"
#include "hil/control.hpp"
#include "hil/harness.hpp"
#include "hil/protocol.hpp"
#include "hil/report.hpp"
#include "hil/simworld.hpp"
#include "hil/vision.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace hil;

namespace {

// Pinned tolerances.
constexpr int campaign_trials = 100;
constexpr double min_success_pct = 95.0;
constexpr double max_campaign_seconds = 600.0;
constexpr double max_rms_lateral_m = 1.0;
constexpr double min_trial_s = 10.0, max_trial_s = 120.0;
constexpr double min_mean_s = 20.0, max_mean_s = 70.0;
constexpr int random_protocol_messages = 10000;
constexpr int random_ccl_frames = 1000;
constexpr double vision_center_tol_px = 3.0;
constexpr double vision_theta_tol_rad = 2.0 * std::numbers::pi / 180.0;
constexpr int control_samples = 100000;
constexpr double homogeneity_rel_tol = 1e-12;
constexpr int throughput_frames = 100;
constexpr double max_median_detect_ms = 33.0;
constexpr int determinism_trials = 12;
constexpr int determinism_jobs = 4;
constexpr std::uint64_t master_seed = 1;

int failures = 0;

void verdict(bool ok, const std::string& name, const std::string& detail)
{
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

harness::TrialConfig default_config()
{
    auto c = config::load(std::filesystem::path(HIL_SOURCE_DIR) / "configs" / "default.json");
    c.seed = master_seed;
    return c;
}

// ---------------------------------------------------------------------------

void campaign_criteria()
{
    const auto config = default_config();
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = harness::run_campaign(config, campaign_trials, 1);
    const double wall = seconds_since(t0);

    verdict(rep.success_pct >= min_success_pct && wall <= max_campaign_seconds, "Campaign fidelity",
            fmt("%d/%d successful (%.1f%%, need >= %.0f%%), %.1f s single-threaded (limit %.0f s)",
                rep.success_count, rep.n_trials, rep.success_pct, min_success_pct, wall, max_campaign_seconds));

    verdict(rep.mse_x <= max_rms_lateral_m && rep.mse_y <= max_rms_lateral_m, "Landing precision",
            fmt("RMS x %.4f m, y %.4f m (limit %.1f m); theta %.4f rad (informational)", rep.mse_x, rep.mse_y,
                max_rms_lateral_m, rep.mse_theta));

    int outside = 0;
    for (const auto& t : rep.trials)
        if (t.success() && (t.duration < min_trial_s || t.duration > max_trial_s))
            ++outside;
    verdict(outside == 0 && rep.time.mean >= min_mean_s && rep.time.mean <= max_mean_s, "Landing duration",
            fmt("%d successful trials outside [%.0f, %.0f] s; mean %.2f s (need [%.0f, %.0f]), median %.2f, "
                "min %.2f, max %.2f",
                outside, min_trial_s, max_trial_s, rep.time.mean, min_mean_s, max_mean_s, rep.time.median,
                rep.time.min, rep.time.max));

    std::printf("\n%s\n%s\n%s\n", report::table_endings(rep).c_str(), report::table_precision(rep).c_str(),
                report::table_time(rep).c_str());
}

// ---------------------------------------------------------------------------

void protocol_criterion()
{
    using namespace protocol;
    bool vectors = true;
    const auto alt = encode_altitude(9.87);
    vectors &= alt[0] == "Am09" && alt[1] == "Ac89";
    vectors &= encode_uplink(parse_uplink(alt[0])) == "Am09" && encode_uplink(parse_uplink(alt[1])) == "Ac89";
    const std::string vel = encode_downlink(Velocity{3.456, 7.892, 1.936});
    vectors &= vel == "v:3.456,7.892,1.936\n";
    vectors &= encode_downlink(parse_downlink(vel)) == vel;

    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> v(-100.0, 100.0);
    std::uniform_int_distribution<int> kind(0, 5), byte(0, 99), code(0, 999), chunk(1, 17);

    std::string up_stream, down_stream;
    std::vector<UplinkMessage> up_sent;
    std::vector<DownlinkMessage> down_sent;
    for (int i = 0; i < random_protocol_messages; ++i) {
        switch (kind(gen)) {
        case 0: up_sent.push_back(AltitudeMeters{byte(gen)}); break;
        case 1: up_sent.push_back(AltitudeCentimeters{byte(gen)}); break;
        case 2: up_sent.push_back(Trigger{code(gen)}); break;
        case 3: down_sent.push_back(Velocity{v(gen), v(gen), v(gen)}); break;
        case 4: down_sent.push_back(YawRate{v(gen)}); break;
        default: down_sent.push_back(Land{}); break;
        }
    }
    for (const auto& m : up_sent)
        up_stream += encode_uplink(m);
    for (const auto& m : down_sent)
        down_stream += encode_downlink(m);

    int mismatches = 0;
    UplinkScanner scanner;
    std::vector<UplinkMessage> up_got;
    for (std::size_t pos = 0; pos < up_stream.size();) {
        const std::size_t n = static_cast<std::size_t>(chunk(gen));
        for (auto& m : scanner.feed(std::string_view(up_stream).substr(pos, n)))
            up_got.push_back(m);
        pos += n;
    }
    if (up_got != up_sent)
        ++mismatches;

    LineAssembler lines;
    std::vector<DownlinkMessage> down_got;
    for (std::size_t pos = 0; pos < down_stream.size();) {
        const std::size_t n = static_cast<std::size_t>(chunk(gen));
        for (const auto& l : lines.feed(std::string_view(down_stream).substr(pos, n)))
            down_got.push_back(parse_downlink(l));
        pos += n;
    }
    if (down_got.size() != down_sent.size()) {
        ++mismatches;
    } else {
        constexpr double q = 0.0005 + 1e-12;
        for (std::size_t i = 0; i < down_got.size(); ++i) {
            const auto& a = down_got[i];
            const auto& b = down_sent[i];
            bool same = a.index() == b.index();
            if (same && a.index() == 0) {
                const auto& x = std::get<Velocity>(a);
                const auto& y = std::get<Velocity>(b);
                same = std::abs(x.vx - y.vx) <= q && std::abs(x.vy - y.vy) <= q && std::abs(x.vz - y.vz) <= q;
            } else if (same && a.index() == 1) {
                same = std::abs(std::get<YawRate>(a).omega - std::get<YawRate>(b).omega) <= q;
            }
            mismatches += !same;
        }
    }

    verdict(vectors && mismatches == 0, "Protocol bit-exactness",
            fmt("reference vectors %s; %zu uplink + %zu downlink randomized messages, 1-17 byte chunks, %d "
                "mismatches",
                vectors ? "reproduced" : "NOT reproduced", up_sent.size(), down_sent.size(), mismatches));
}

// ---------------------------------------------------------------------------

void ccl_criterion()
{
    int bad = 0;
    for (int bits = 0; bits < 512; ++bits) {
        BinaryFrame f(3, 3);
        for (int i = 0; i < 9; ++i)
            f.set(i % 3, i / 3, (bits >> i) & 1);
        bad += oracle::compare_labelling(f) != 0;
    }
    std::mt19937 gen(77);
    for (int i = 0; i < random_ccl_frames; ++i) {
        std::bernoulli_distribution d(0.05 + 0.9 * (i % 19) / 18.0);
        BinaryFrame f(64, 64);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                f.set(x, y, d(gen));
        bad += oracle::compare_labelling(f) != 0;
    }
    verdict(bad == 0, "CCL oracle equivalence",
            fmt("512 exhaustive 3x3 + %d random 64x64 frames, %d discrepant frames", random_ccl_frames, bad));
}

// ---------------------------------------------------------------------------

void vision_criterion()
{
    const sim::CameraModel cam;
    const sim::MarkerGeometry marker;
    const vision::VisionParams params;
    const double offsets[3][2] = {{0.0, 0.0}, {0.5, -0.3}, {-0.4, 0.6}};
    const double yaws[3] = {0.0, 1.2, -2.4};
    int ok = 0, total = 0;
    double worst_px = 0.0, worst_theta = 0.0;
    for (double h : {5.0, 7.5, 10.0})
        for (const auto& off : offsets)
            for (double yaw : yaws) {
                ++total;
                sim::DroneState s;
                s.north = off[0];
                s.east = off[1];
                s.down = -h;
                s.yaw = yaw;
                const auto frame = sim::render_camera(s, cam, marker);
                const auto pose = vision::detect(frame, h, cam, marker, params);
                if (!pose) {
                    worst_px = 1e9;
                    continue;
                }
                // Ground truth from projecting the marker centre and a point
                // one metre along the layout axis (east at marker yaw 0).
                const auto c0 = sim::project_to_image(s, cam, 0.0, 0.0);
                const auto c1 = sim::project_to_image(s, cam, 0.0, 1.0);
                const double theta = std::atan2(-(c1.y - c0.y), c1.x - c0.x);
                const double dpx = std::hypot(pose->x_px - c0.x, pose->y_px - c0.y);
                const double dth = std::abs(sim::normalize_angle(pose->theta - theta));
                worst_px = std::max(worst_px, dpx);
                worst_theta = std::max(worst_theta, dth);
                ok += dpx <= vision_center_tol_px && dth <= vision_theta_tol_rad;
            }
    verdict(ok == total, "Vision round trip",
            fmt("%d/%d poses within %.0f px / %.0f deg; worst centre error %.3f px, worst theta error %.4f deg", ok,
                total, vision_center_tol_px, vision_theta_tol_rad * 180 / std::numbers::pi, worst_px,
                worst_theta * 180 / std::numbers::pi));
}

// ---------------------------------------------------------------------------

void control_criterion()
{
    const control::ControlParams p;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> pos(-20.0, 20.0), ang(-std::numbers::pi, std::numbers::pi),
        alt(0.0, 50.0), scale(1e-3, 1e3);
    int vz_violations = 0, homogeneity_violations = 0;
    auto rel = [](double a, double b) { return std::abs(a - b) <= homogeneity_rel_tol * std::max(1.0, std::abs(b)); };
    for (int i = 0; i < control_samples; ++i) {
        const control::PoseError e{pos(gen), pos(gen), ang(gen), alt(gen)};
        const auto a = control::compute_command(e, control::LandingStage::Align, p);
        vz_violations += a.vz != 0.0;
        const double c = scale(gen);
        for (auto stage : {control::LandingStage::Align, control::LandingStage::Descend}) {
            const auto base = control::compute_command(e, stage, p);
            const auto scaled = control::compute_command({c * e.dx, c * e.dy, c * e.dtheta, e.h}, stage, p);
            homogeneity_violations += !(rel(scaled.vx, c * base.vx) && rel(scaled.vy, c * base.vy) &&
                                        rel(scaled.omega_yaw, c * base.omega_yaw) && scaled.vz == base.vz);
        }
    }
    verdict(vz_violations == 0 && homogeneity_violations == 0, "Control invariants",
            fmt("%d random errors: %d ALIGN vz != 0, %d homogeneity violations (rel tol %.0e)", control_samples,
                vz_violations, homogeneity_violations, homogeneity_rel_tol));
}

// ---------------------------------------------------------------------------

void throughput_criterion()
{
    const sim::CameraModel cam;
    const sim::MarkerGeometry marker;
    const vision::VisionParams params;
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> alt(5.0, 10.0), yaw(-std::numbers::pi, std::numbers::pi),
        off(-0.5, 0.5);
    std::vector<double> ms;
    int found = 0;
    for (int i = 0; i < throughput_frames; ++i) {
        sim::DroneState s;
        s.north = off(gen);
        s.east = off(gen);
        s.down = -alt(gen);
        s.yaw = yaw(gen);
        const auto frame = sim::render_camera(s, cam, marker);
        const auto t0 = std::chrono::steady_clock::now();
        found += vision::detect(frame, s.altitude(), cam, marker, params).has_value();
        ms.push_back(seconds_since(t0) * 1000.0);
    }
    std::sort(ms.begin(), ms.end());
    const double median = 0.5 * (ms[ms.size() / 2 - 1] + ms[ms.size() / 2]);
    verdict(median <= max_median_detect_ms, "Throughput",
            fmt("median detect %.2f ms over %d 1280x720 frames (limit %.0f ms), max %.2f ms, %d detections",
                median, throughput_frames, max_median_detect_ms, ms.back(), found));
}

// ---------------------------------------------------------------------------

void determinism_criterion()
{
    const auto config = default_config();
    const auto base = std::filesystem::temp_directory_path() / "hil_acceptance_determinism";
    std::filesystem::remove_all(base);
    auto write = [&](const std::string& name, int jobs) {
        const auto rep = harness::run_campaign(config, determinism_trials, jobs);
        report::RunManifest m;
        m.command = "campaign";
        m.config = config::to_json(config);
        m.master_seed = config.seed;
        m.n_trials = determinism_trials;
        report::write_campaign(base / name, rep, m);
    };
    write("a", 1);
    write("b", 1);
    write("c", determinism_jobs);
    int differing = 0, files = 0;
    for (const auto& e : std::filesystem::directory_iterator(base / "a")) {
        ++files;
        const auto name = e.path().filename();
        const auto ref = slurp(e.path());
        differing += ref != slurp(base / "b" / name);
        differing += ref != slurp(base / "c" / name);
    }
    verdict(differing == 0 && files == 6, "Determinism",
            fmt("%d-trial campaigns from seed %llu: %d report files, %d differ across two jobs=1 runs and a "
                "jobs=%d run",
                determinism_trials, static_cast<unsigned long long>(master_seed), files, differing,
                determinism_jobs));
}

// ---------------------------------------------------------------------------

void transport_criterion()
{
    auto config = default_config();
    config.seed = 17;
    config.record_trajectory = true;
    config.transport.kind = transport::Kind::InProcess;
    const auto a = harness::run_trial(config);
    config.transport.kind = transport::Kind::Tcp;
    const auto b = harness::run_trial(config);
    verdict(a == b && a.success(), "Transport equivalence",
            fmt("seed 17: in-process %s %.2f s, tcp %s %.2f s, %zu trajectory samples, results %s",
                std::string(harness::to_string(a.outcome)).c_str(), a.duration,
                std::string(harness::to_string(b.outcome)).c_str(), b.duration, a.trajectory.size(),
                a == b ? "identical" : "DIFFERENT"));
}

}  // namespace

int main()
{
    protocol_criterion();
    ccl_criterion();
    vision_criterion();
    control_criterion();
    throughput_criterion();
    transport_criterion();
    determinism_criterion();
    campaign_criteria();
    std::printf("%d criterion line(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
