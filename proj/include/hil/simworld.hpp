#pragma once

#include "hil/control.hpp"
#include "hil/image.hpp"
#include "hil/rng.hpp"
#include "hil/scene.hpp"
#include "hil/vision.hpp"

#include <cstdint>

namespace hil::sim {

/// Kinematic drone in world NED. Velocities are body-aligned.
struct DroneState {
    double north = 0.0;
    double east = 0.0;
    double down = 0.0;
    double yaw = 0.0;
    double vx = 0.0, vy = 0.0, vz = 0.0;
    double yaw_rate = 0.0;
    bool landed = false;

    double altitude() const noexcept { return -down; }

    friend bool operator==(const DroneState&, const DroneState&) = default;
};

struct SensorModel {
    double altitude_noise_sigma = 0.02;
    double quantization = 0.01;
};

struct DynamicsParams {
    /// First-order velocity lag; 0 means the command is followed instantly.
    double lag_tau = 0.0;
    /// Descent rate of the autopilot's own landing procedure once triggered.
    double auto_land_speed = 0.5;
};

struct SceneLuminance {
    std::uint8_t ground = 200;
    std::uint8_t figure = 40;
};

/// Advances the state by dt under a constant command. The body velocity is
/// integrated along the exact arc traced while yawing, so splitting a step
/// into substeps does not change the result. Touching the ground latches.
DroneState step_dynamics(const DroneState& state, const control::ControlOutput& cmd, double dt,
                         const DynamicsParams& params = {});

/// Command the autopilot follows after the final-landing request.
control::ControlOutput auto_land_command(const DynamicsParams& params) noexcept;

/// Rasterises the marker seen by the downward camera with 2x2 supersampling.
GrayFrame render_camera(const DroneState& state, const CameraModel& camera, const MarkerGeometry& marker,
                        SceneLuminance luminance = {});

/// World point to image coordinates (may fall outside the sensor).
vision::PixelPoint project_to_image(const DroneState& state, const CameraModel& camera, double north,
                                    double east);

/// Image coordinates to the ground point they see.
GroundPose image_to_ground(const DroneState& state, const CameraModel& camera, double u, double v);

bool marker_center_in_view(const DroneState& state, const CameraModel& camera, const MarkerGeometry& marker);

double sense_altitude(const DroneState& state, const SensorModel& sensor, Rng& rng);

bool is_touchdown(const DroneState& state) noexcept;

inline constexpr double touchdown_altitude = 0.01;
inline constexpr double min_render_altitude = 0.05;

}  // namespace hil::sim
