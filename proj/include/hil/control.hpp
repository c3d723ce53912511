#pragma once

#include "hil/scene.hpp"
#include "hil/vision.hpp"

#include <deque>
#include <optional>
#include <string_view>

namespace hil::control {

struct Gains {
    double k1 = 0.8;  // (m/s) per m of lateral error
    double k2 = 0.1;  // (m/s) per m of altitude
    double k3 = 0.7;  // (rad/s) per rad of yaw error
};

/// Marker relative to the drone in the body frame, plus current altitude.
struct PoseError {
    double dx = 0.0;
    double dy = 0.0;
    double dtheta = 0.0;
    double h = 0.0;
};

enum class LandingStage { Align, Descend, Final, Done };

std::string_view to_string(LandingStage stage) noexcept;

/// Body-aligned velocity command; vz is positive down when the NED flag is set.
struct ControlOutput {
    double vx = 0.0;
    double vy = 0.0;
    double vz = 0.0;
    double omega_yaw = 0.0;
    bool final_land = false;

    friend bool operator==(const ControlOutput&, const ControlOutput&) = default;
};

struct VelocityLimits {
    double lateral = 3.0;
    double vertical = 2.0;
    double yaw_rate = 1.5;
};

struct ControlParams {
    Gains gains;
    double align_pos_tol = 0.25;
    double align_yaw_tol = 0.15;
    double h_land = 0.5;
    bool vz_descend_is_positive_down = true;
    VelocityLimits limits;
    /// Moving-average window over altitude readings; 0 or 1 disables it.
    int altitude_average_window = 0;

    /// Checks the documented invariants. Gain positivity can be waived for
    /// deliberate fault experiments (zero or sign-flipped gains).
    void validate(bool require_positive_gains = true) const;
};

PoseError pixel_to_metric(const vision::MarkerPose& pose, double altitude_m, const sim::CameraModel& camera);

/// The proportional laws, without saturation. Calling it in Done is a
/// contract violation and throws std::logic_error.
ControlOutput compute_command(const PoseError& err, LandingStage stage, const ControlParams& params);

LandingStage advance_stage(LandingStage stage, const PoseError& err, const ControlParams& params,
                           bool touchdown = false);

/// Hover in place.
ControlOutput hold_command() noexcept;

ControlOutput saturate(ControlOutput cmd, const VelocityLimits& limits) noexcept;

/// DUT-side landing state machine. Owns the stage and feeds detections or
/// dropouts through the control laws.
class LandingController {
public:
    explicit LandingController(ControlParams params);

    /// One control period. `pose_error` is empty when the marker was not
    /// detected; the vertical law only needs altitude and keeps running in
    /// Descend. `altitude_m` is the reading after filter_altitude(). Readings
    /// at or below `touchdown_alt` in Final are the touchdown notification.
    ControlOutput update(const std::optional<PoseError>& pose_error, double altitude_m);

    /// Altitude after the optional moving average.
    double filter_altitude(double altitude_m);

    LandingStage stage() const noexcept { return stage_; }
    const ControlParams& params() const noexcept { return params_; }

    static constexpr double touchdown_alt = 0.01;

private:
    ControlParams params_;
    LandingStage stage_ = LandingStage::Align;
    std::deque<double> window_;
};

}  // namespace hil::control
