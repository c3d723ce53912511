#pragma once

#include "hil/control.hpp"
#include "hil/protocol.hpp"
#include "hil/rng.hpp"
#include "hil/scene.hpp"
#include "hil/simworld.hpp"
#include "hil/transport.hpp"
#include "hil/vision.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hil::harness {

struct TrialConfig {
    std::uint64_t seed = 1;
    double altitude_min = 5.0;
    double altitude_max = 10.0;
    double yaw_min = -std::numbers::pi;
    double yaw_max = std::numbers::pi;
    double control_period = 0.05;
    double frame_rate = 20.0;  // one frame per control period
    double timeout = 120.0;
    int loss_frames = 40;
    /// Fraction of the half field of view kept free around the marker at start.
    double view_margin = 0.10;
    bool record_trajectory = false;
    /// Fixed initial state instead of a sampled one.
    std::optional<sim::DroneState> start;

    vision::VisionParams vision;
    control::ControlParams control;
    sim::CameraModel camera;
    sim::MarkerGeometry marker;
    sim::SensorModel sensor;
    sim::DynamicsParams dynamics;
    sim::SceneLuminance luminance;
    transport::Params transport;

    /// Checks every block. Gain positivity is left to the config loader so
    /// fault experiments can run zero or negative gains.
    void validate() const;
};

enum class Outcome { Success, MarkerLost, Timeout, TransportError };

std::string_view to_string(Outcome outcome) noexcept;

struct TrajectorySample {
    double t = 0.0;
    double north = 0.0, east = 0.0, altitude = 0.0, yaw = 0.0;

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct TrialResult {
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::Timeout;
    std::string detail;
    sim::DroneState start;
    /// Drone minus marker in world north/east at the end of the trial.
    double final_err_x = 0.0;
    double final_err_y = 0.0;
    double final_err_theta = 0.0;
    double duration = 0.0;
    int frames = 0;
    std::vector<TrajectorySample> trajectory;

    bool success() const noexcept { return outcome == Outcome::Success; }

    friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct TimeStats {
    double mean = 0.0, median = 0.0, max = 0.0, min = 0.0;
};

struct CampaignReport {
    std::uint64_t master_seed = 0;
    int n_trials = 0;
    int success_count = 0;
    double success_pct = 0.0;
    /// Root-mean-square final errors over successful trials.
    double mse_x = 0.0, mse_y = 0.0, mse_theta = 0.0;
    TimeStats time;
    std::vector<TrialResult> trials;
};

/// Initial drone state: altitude and yaw uniform in the configured ranges,
/// lateral offset uniform over the disc that keeps the whole marker inside
/// the view with the configured margin.
sim::DroneState sample_start(Rng& rng, const TrialConfig& config);

/// Largest lateral offset sample_start may draw at the given altitude.
double max_start_offset(double altitude_m, const TrialConfig& config);

/// DUT side: vision, controller and protocol on one endpoint.
class DutNode {
public:
    DutNode(const TrialConfig& config);

    /// Serves one control period: waits for a frame and an altitude reading,
    /// then answers with "l:1" or a velocity and yaw-rate pair. Returns false
    /// once the link has closed.
    bool service(transport::Endpoint& link);

    /// Serves periods until the link closes.
    void run(transport::Endpoint& link);

    control::LandingStage stage() const noexcept { return controller_.stage(); }
    bool started() const noexcept { return started_; }
    /// Whether the last served frame produced a pose.
    bool last_detected() const noexcept { return last_detected_; }

private:
    std::optional<protocol::UplinkMessage> next_message(transport::ByteStream& bytes);

    sim::CameraModel camera_;
    sim::MarkerGeometry marker_;
    vision::VisionParams vision_;
    control::LandingController controller_;
    protocol::UplinkScanner scanner_;
    protocol::AltitudeAssembler altitude_;
    std::deque<protocol::UplinkMessage> pending_;
    bool started_ = false;
    bool last_detected_ = false;
};

/// Called with (period index, frame) for every rendered frame.
using FrameSink = std::function<void(int, const GrayFrame&)>;

/// One closed-loop landing. The DUT runs co-scheduled in the calling thread
/// for in-process links and on its own thread otherwise.
TrialResult run_trial(const TrialConfig& config, const FrameSink& frames = {});

/// Runs the world side against an already attached endpoint, e.g. a serial
/// DUT. `service_dut` is called once per period after the frame is sent;
/// pass an empty function when the DUT runs independently.
TrialResult run_world(const TrialConfig& config, transport::Endpoint& world,
                      const std::function<void()>& service_dut, const FrameSink& frames = {});

/// Trial i uses seed master_seed + i. Workers share nothing but the result
/// slots, so the report does not depend on `jobs`.
CampaignReport run_campaign(const TrialConfig& config, int n, int jobs = 1,
                            const std::function<void(int, const TrialResult&)>& progress = {});

CampaignReport summarize(std::uint64_t master_seed, std::vector<TrialResult> trials);

}  // namespace hil::harness
