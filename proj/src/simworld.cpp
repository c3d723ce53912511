#include "hil/simworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace hil::sim {

void CameraModel::validate() const
{
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("camera dimensions must be positive");
    if (!(f_px > 0.0))
        throw std::invalid_argument("camera.f_px must be positive");
    if (std::abs(x_sign) != 1 || std::abs(y_sign) != 1)
        throw std::invalid_argument("camera mounting signs must be +1 or -1");
}

double MarkerGeometry::bounding_radius() const noexcept
{
    const double sq = std::hypot(square_offset + 0.5 * square_side, 0.5 * square_side);
    const double rc = std::hypot(rect_offset + 0.5 * rect_short, 0.5 * rect_long);
    return std::max({ring_outer_r, sq, rc});
}

void MarkerGeometry::validate() const
{
    if (!(ring_inner_r > 0.0 && ring_inner_r < ring_outer_r))
        throw std::invalid_argument("marker ring radii must satisfy 0 < inner < outer");
    if (!(square_side > 0.0 && rect_long > 0.0 && rect_short > 0.0))
        throw std::invalid_argument("marker figure sizes must be positive");
    if (!(rect_short < rect_long))
        throw std::invalid_argument("marker rectangle short side must be below its long side");
    if (!(square_offset >= 0.0 && rect_offset >= 0.0))
        throw std::invalid_argument("marker figure offsets must be non-negative");
}

// ---------------------------------------------------------------------------
// Kinematics

control::ControlOutput auto_land_command(const DynamicsParams& params) noexcept
{
    control::ControlOutput cmd;
    cmd.vz = params.auto_land_speed;
    cmd.final_land = true;
    return cmd;
}

DroneState step_dynamics(const DroneState& state, const control::ControlOutput& cmd, double dt,
                         const DynamicsParams& params)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("dt must be positive");
    DroneState next = state;
    if (state.landed) {
        next.vx = next.vy = next.vz = next.yaw_rate = 0.0;
        return next;
    }

    if (params.lag_tau > 0.0) {
        const double a = 1.0 - std::exp(-dt / params.lag_tau);
        next.vx += (cmd.vx - next.vx) * a;
        next.vy += (cmd.vy - next.vy) * a;
        next.vz += (cmd.vz - next.vz) * a;
        next.yaw_rate += (cmd.omega_yaw - next.yaw_rate) * a;
    } else {
        next.vx = cmd.vx;
        next.vy = cmd.vy;
        next.vz = cmd.vz;
        next.yaw_rate = cmd.omega_yaw;
    }

    // Integral of R(yaw0 + w t) over [0, dt], applied to the body velocity.
    const double y0 = state.yaw;
    const double w = next.yaw_rate;
    const double y1 = y0 + w * dt;
    double c_int = 0.0, s_int = 0.0;  // integrals of cos and sin
    if (std::abs(w * dt) < 1e-9) {
        const double ym = y0 + 0.5 * w * dt;
        c_int = std::cos(ym) * dt;
        s_int = std::sin(ym) * dt;
    } else {
        c_int = (std::sin(y1) - std::sin(y0)) / w;
        s_int = -(std::cos(y1) - std::cos(y0)) / w;
    }
    next.north += c_int * next.vx - s_int * next.vy;
    next.east += s_int * next.vx + c_int * next.vy;
    next.down += next.vz * dt;
    next.yaw = normalize_angle(y1);

    if (next.down >= 0.0) {
        next.down = 0.0;
        next.landed = true;
        next.vx = next.vy = next.vz = next.yaw_rate = 0.0;
    }
    return next;
}

// ---------------------------------------------------------------------------
// Projection

vision::PixelPoint project_to_image(const DroneState& state, const CameraModel& camera, double north, double east)
{
    const double h = state.altitude();
    if (!(h > 0.0))
        throw std::invalid_argument("projection needs a positive altitude");
    const double dn = north - state.north;
    const double de = east - state.east;
    const double c = std::cos(state.yaw), s = std::sin(state.yaw);
    const double bx = c * dn + s * de;
    const double by = -s * dn + c * de;
    const double k = camera.f_px / h;
    return {camera.cx() + camera.x_sign * by * k, camera.cy() + camera.y_sign * bx * k};
}

GroundPose image_to_ground(const DroneState& state, const CameraModel& camera, double u, double v)
{
    const double h = state.altitude();
    if (!(h > 0.0))
        throw std::invalid_argument("projection needs a positive altitude");
    const double k = h / camera.f_px;
    const double bx = camera.y_sign * (v - camera.cy()) * k;
    const double by = camera.x_sign * (u - camera.cx()) * k;
    const double c = std::cos(state.yaw), s = std::sin(state.yaw);
    return {state.north + c * bx - s * by, state.east + s * bx + c * by, 0.0};
}

bool marker_center_in_view(const DroneState& state, const CameraModel& camera, const MarkerGeometry& marker)
{
    if (!(state.altitude() > 0.0))
        return true;  // on the ground the question is moot
    const auto p = project_to_image(state, camera, marker.pose.north, marker.pose.east);
    return p.x >= -0.5 && p.y >= -0.5 && p.x <= camera.width - 0.5 && p.y <= camera.height - 0.5;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// Marker-frame coordinates along one sample row: (p, q) = (pa + pb t, qa + qb t)
// with t the image u coordinate.
struct Line {
    double pa, pb, qa, qb;
};

struct Interval {
    double lo, hi;
    bool empty() const noexcept { return !(lo <= hi); }
};

constexpr Interval kEmpty{1.0, 0.0};

Interval slab(double a, double b, double lo, double hi)
{
    if (std::abs(b) < 1e-15)
        return (a >= lo && a <= hi) ? Interval{-INFINITY, INFINITY} : kEmpty;
    double t0 = (lo - a) / b, t1 = (hi - a) / b;
    if (t0 > t1)
        std::swap(t0, t1);
    return {t0, t1};
}

Interval box(const Line& l, double p_lo, double p_hi, double q_lo, double q_hi)
{
    const auto ip = slab(l.pa, l.pb, p_lo, p_hi);
    const auto iq = slab(l.qa, l.qb, q_lo, q_hi);
    return {std::max(ip.lo, iq.lo), std::min(ip.hi, iq.hi)};
}

Interval disc(const Line& l, double r)
{
    const double a = l.pb * l.pb + l.qb * l.qb;
    const double b = 2.0 * (l.pa * l.pb + l.qa * l.qb);
    const double c = l.pa * l.pa + l.qa * l.qa - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0 || a <= 0.0)
        return kEmpty;
    const double sq = std::sqrt(disc);
    return {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)};
}

// Sample k of a row sits at u = k / 2 - 0.25.
int first_sample_at_or_after(double t)
{
    return static_cast<int>(std::ceil(2.0 * t + 0.5));
}

int last_sample_at_or_before(double t)
{
    return static_cast<int>(std::floor(2.0 * t + 0.5));
}

struct SampleSpan {
    int k0, k1;  // inclusive
};

class RowCoverage {
public:
    explicit RowCoverage(int width) : samples_(2 * width), cov_(width, 0) {}

    void add_closed(const Interval& iv)
    {
        if (iv.empty())
            return;
        push(first_sample_at_or_after(iv.lo), last_sample_at_or_before(iv.hi));
    }

    // Closed outer interval minus the open inner interval.
    void add_annulus(const Interval& outer, const Interval& inner)
    {
        if (outer.empty())
            return;
        const int k0 = first_sample_at_or_after(outer.lo);
        const int k1 = last_sample_at_or_before(outer.hi);
        if (inner.empty() || inner.lo == inner.hi) {
            push(k0, k1);
            return;
        }
        // Samples strictly inside the inner disc.
        const int i0 = last_sample_at_or_before(inner.lo) + 1;
        const int i1 = first_sample_at_or_after(inner.hi) - 1;
        push(k0, std::min(k1, i0 - 1));
        push(std::max(k0, i1 + 1), k1);
    }

    // Merges this sample row's spans into the per-pixel coverage counts.
    void commit()
    {
        std::sort(spans_.begin(), spans_.end(), [](auto& a, auto& b) { return a.k0 < b.k0; });
        int next = 0;
        for (auto s : spans_) {
            s.k0 = std::max(s.k0, next);
            for (int k = s.k0; k <= s.k1; ++k)
                ++cov_[k >> 1];
            next = std::max(next, s.k1 + 1);
        }
        any_ = any_ || !spans_.empty();
        spans_.clear();
    }

    bool any() const noexcept { return any_; }
    const std::vector<std::uint8_t>& coverage() const noexcept { return cov_; }

    void reset()
    {
        if (any_)
            std::fill(cov_.begin(), cov_.end(), 0);
        any_ = false;
    }

private:
    void push(int k0, int k1)
    {
        k0 = std::max(k0, 0);
        k1 = std::min(k1, samples_ - 1);
        if (k0 <= k1)
            spans_.push_back({k0, k1});
    }

    int samples_;
    std::vector<std::uint8_t> cov_;
    std::vector<SampleSpan> spans_;
    bool any_ = false;
};

}  // namespace

GrayFrame render_camera(const DroneState& state, const CameraModel& camera, const MarkerGeometry& marker,
                        SceneLuminance luminance)
{
    const double h = state.altitude();
    if (!(h > min_render_altitude))
        throw std::invalid_argument("render_camera needs altitude above 0.05 m");

    GrayFrame frame(camera.width, camera.height, luminance.ground);

    // Image (u, v) -> world (north, east), affine.
    const double k = h / camera.f_px;
    const double c = std::cos(state.yaw), s = std::sin(state.yaw);
    // bx = y_sign (v - cy) k ; by = x_sign (u - cx) k
    const double n_u = -s * camera.x_sign * k, n_v = c * camera.y_sign * k;
    const double e_u = c * camera.x_sign * k, e_v = s * camera.y_sign * k;
    const double n_0 = state.north - n_u * camera.cx() - n_v * camera.cy();
    const double e_0 = state.east - e_u * camera.cx() - e_v * camera.cy();

    // World -> marker frame. p along the layout axis (heading yaw + pi/2),
    // q along heading yaw + pi.
    const double cm = std::cos(marker.pose.yaw), sm = std::sin(marker.pose.yaw);
    const double lx = -sm, ly = cm;
    const double qx = -cm, qy = -sm;
    auto to_p = [&](double dn, double de) { return dn * lx + de * ly; };
    auto to_q = [&](double dn, double de) { return dn * qx + de * qy; };

    const double p_u = to_p(n_u, e_u), p_v = to_p(n_v, e_v);
    const double q_u = to_q(n_u, e_u), q_v = to_q(n_v, e_v);
    const double p_0 = to_p(n_0 - marker.pose.north, e_0 - marker.pose.east);
    const double q_0 = to_q(n_0 - marker.pose.north, e_0 - marker.pose.east);

    // Skip rows that cannot touch the marker's bounding disc.
    const auto centre = project_to_image(state, camera, marker.pose.north, marker.pose.east);
    const double reach = marker.bounding_radius() / k + 2.0;
    const int y_first = std::max(0, static_cast<int>(std::floor(centre.y - reach)));
    const int y_last = std::min(camera.height - 1, static_cast<int>(std::ceil(centre.y + reach)));

    const double hs = 0.5 * marker.square_side;
    const double sq_p = -marker.square_offset;
    const double rc_p = marker.rect_offset;
    const double rc_hp = 0.5 * marker.rect_short;
    const double rc_hq = 0.5 * marker.rect_long;

    std::array<std::uint8_t, 5> shade{};
    for (int n = 0; n <= 4; ++n) {
        const double v = luminance.ground + (luminance.figure - luminance.ground) * (n / 4.0);
        shade[n] = static_cast<std::uint8_t>(std::lround(v));
    }

    RowCoverage row(camera.width);
    for (int y = y_first; y <= y_last; ++y) {
        row.reset();
        for (const double v : {y - 0.25, y + 0.25}) {
            const Line l{p_0 + p_v * v, p_u, q_0 + q_v * v, q_u};
            row.add_annulus(disc(l, marker.ring_outer_r), disc(l, marker.ring_inner_r));
            row.add_closed(box(l, sq_p - hs, sq_p + hs, -hs, hs));
            row.add_closed(box(l, rc_p - rc_hp, rc_p + rc_hp, -rc_hq, rc_hq));
            row.commit();
        }
        if (!row.any())
            continue;
        auto dst = frame.row(y);
        const auto& cov = row.coverage();
        for (int x = 0; x < camera.width; ++x)
            dst[x] = shade[cov[x]];
    }
    return frame;
}

// ---------------------------------------------------------------------------
// Sensors

double sense_altitude(const DroneState& state, const SensorModel& sensor, Rng& rng)
{
    double h = state.altitude();
    if (sensor.altitude_noise_sigma > 0.0)
        h += rng.normal(0.0, sensor.altitude_noise_sigma);
    if (sensor.quantization > 0.0)
        h = std::round(h / sensor.quantization) * sensor.quantization;
    return std::max(h, 0.0);
}

bool is_touchdown(const DroneState& state) noexcept
{
    return state.altitude() <= touchdown_altitude;
}

}  // namespace hil::sim
