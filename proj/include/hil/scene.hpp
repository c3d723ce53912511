#pragma once

#include <cmath>
#include <numbers>

namespace hil::sim {

/// Downward-looking pinhole camera.
///
/// Pixel indices are pixel centres, so the principal point of a W x H sensor
/// sits at ((W - 1) / 2, (H - 1) / 2). The mounting signs map image axes onto
/// the body frame: body_y = x_sign * (u - cx) * h / f and
/// body_x = y_sign * (v - cy) * h / f. The defaults (+1, -1) put body forward
/// at the top of the image and body right at the right, which is what a real
/// camera looking straight down sees.
struct CameraModel {
    int width = 1280;
    int height = 720;
    double f_px = 620.0;
    int x_sign = +1;
    int y_sign = -1;

    double cx() const noexcept { return (width - 1) * 0.5; }
    double cy() const noexcept { return (height - 1) * 0.5; }

    void validate() const;
};

struct GroundPose {
    double north = 0.0;
    double east = 0.0;
    double yaw = 0.0;
};

/// Landing marker: an annulus at the centre with a solid square and a solid
/// rectangle on opposite sides along the layout axis. There is no inner ring.
///
/// Marker-frame coordinates (p, q): p runs along the layout axis from the
/// square toward the rectangle, q is p rotated by +90 degrees (clockwise seen
/// from above). At marker yaw 0 the layout axis points east and q points
/// south. The rectangle's long side lies along q.
struct MarkerGeometry {
    double ring_inner_r = 0.7;
    double ring_outer_r = 0.9;
    double square_side = 0.5;
    double square_offset = 1.3;
    double rect_long = 1.0;
    double rect_short = 0.4;
    double rect_offset = 1.3;
    GroundPose pose;

    /// Radius of the smallest centred disc containing every figure.
    double bounding_radius() const noexcept;

    void validate() const;
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) noexcept
{
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace hil::sim
