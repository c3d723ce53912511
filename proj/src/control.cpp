#include "hil/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hil::control {

std::string_view to_string(LandingStage stage) noexcept
{
    switch (stage) {
    case LandingStage::Align: return "align";
    case LandingStage::Descend: return "descend";
    case LandingStage::Final: return "final";
    case LandingStage::Done: return "done";
    }
    return "unknown";
}

void ControlParams::validate(bool require_positive_gains) const
{
    if (!(std::isfinite(gains.k1) && std::isfinite(gains.k2) && std::isfinite(gains.k3)))
        throw std::invalid_argument("control gains must be finite");
    if (require_positive_gains && !(gains.k1 > 0.0 && gains.k2 > 0.0 && gains.k3 > 0.0))
        throw std::invalid_argument("control gains must be strictly positive");
    if (!(align_pos_tol > 0.0 && align_yaw_tol > 0.0))
        throw std::invalid_argument("control alignment tolerances must be positive");
    if (!(h_land > 0.0))
        throw std::invalid_argument("control.h_land must be positive");
    if (!(limits.lateral > 0.0 && limits.vertical > 0.0 && limits.yaw_rate > 0.0))
        throw std::invalid_argument("control velocity limits must be positive");
    if (altitude_average_window < 0)
        throw std::invalid_argument("control.altitude_average_window must be >= 0");
}

PoseError pixel_to_metric(const vision::MarkerPose& pose, double altitude_m, const sim::CameraModel& camera)
{
    if (!(altitude_m > 0.0))
        throw std::invalid_argument("altitude must be positive");
    const double scale = altitude_m / camera.f_px;
    const double du = pose.x_px - camera.cx();
    const double dv = pose.y_px - camera.cy();

    // Layout-axis direction in the image (y up) carried into the body frame.
    const double axis_u = std::cos(pose.theta);
    const double axis_v = -std::sin(pose.theta);
    const double axis_heading = std::atan2(camera.x_sign * axis_u, camera.y_sign * axis_v);

    PoseError err;
    err.dx = camera.y_sign * dv * scale;
    err.dy = camera.x_sign * du * scale;
    // The layout axis sits at body heading +pi/2 once the drone is aligned.
    err.dtheta = sim::normalize_angle(axis_heading - std::numbers::pi / 2);
    err.h = altitude_m;
    return err;
}

ControlOutput compute_command(const PoseError& err, LandingStage stage, const ControlParams& params)
{
    const auto& g = params.gains;
    ControlOutput out;
    switch (stage) {
    case LandingStage::Align:
        out.vx = g.k1 * err.dx;
        out.vy = g.k1 * err.dy;
        out.omega_yaw = g.k3 * err.dtheta;
        out.vz = 0.0;
        break;
    case LandingStage::Descend:
        out.vx = g.k1 * err.dx;
        out.vy = g.k1 * err.dy;
        out.omega_yaw = g.k3 * err.dtheta;
        out.vz = (params.vz_descend_is_positive_down ? 1.0 : -1.0) * g.k2 * err.h;
        break;
    case LandingStage::Final:
        out.final_land = true;
        break;
    case LandingStage::Done:
        throw std::logic_error("compute_command called after landing completed");
    }
    return out;
}

LandingStage advance_stage(LandingStage stage, const PoseError& err, const ControlParams& params, bool touchdown)
{
    switch (stage) {
    case LandingStage::Align:
        if (std::abs(err.dx) < params.align_pos_tol && std::abs(err.dy) < params.align_pos_tol &&
            std::abs(err.dtheta) < params.align_yaw_tol)
            return LandingStage::Descend;
        return stage;
    case LandingStage::Descend:
        return err.h <= params.h_land ? LandingStage::Final : stage;
    case LandingStage::Final:
        return touchdown ? LandingStage::Done : stage;
    case LandingStage::Done:
        return stage;
    }
    return stage;
}

ControlOutput hold_command() noexcept
{
    return {};
}

ControlOutput saturate(ControlOutput cmd, const VelocityLimits& limits) noexcept
{
    cmd.vx = std::clamp(cmd.vx, -limits.lateral, limits.lateral);
    cmd.vy = std::clamp(cmd.vy, -limits.lateral, limits.lateral);
    cmd.vz = std::clamp(cmd.vz, -limits.vertical, limits.vertical);
    cmd.omega_yaw = std::clamp(cmd.omega_yaw, -limits.yaw_rate, limits.yaw_rate);
    return cmd;
}

LandingController::LandingController(ControlParams params) : params_(params) {}

double LandingController::filter_altitude(double altitude_m)
{
    if (params_.altitude_average_window <= 1)
        return altitude_m;
    window_.push_back(altitude_m);
    while (static_cast<int>(window_.size()) > params_.altitude_average_window)
        window_.pop_front();
    return std::accumulate(window_.begin(), window_.end(), 0.0) / static_cast<double>(window_.size());
}

ControlOutput LandingController::update(const std::optional<PoseError>& pose_error, double altitude_m)
{
    if (stage_ == LandingStage::Done)
        return hold_command();

    const bool touchdown = altitude_m <= touchdown_alt;
    if (pose_error) {
        stage_ = advance_stage(stage_, *pose_error, params_, touchdown);
        if (stage_ == LandingStage::Done)
            return hold_command();
        return saturate(compute_command(*pose_error, stage_, params_), params_.limits);
    }

    // No detection: hover while aligning; past alignment the vertical law
    // keeps running on altitude alone and lateral motion is held.
    if (stage_ == LandingStage::Align)
        return hold_command();
    const PoseError blind{0.0, 0.0, 0.0, altitude_m};
    stage_ = advance_stage(stage_, blind, params_, touchdown);
    if (stage_ == LandingStage::Done)
        return hold_command();
    return saturate(compute_command(blind, stage_, params_), params_.limits);
}

}  // namespace hil::control
