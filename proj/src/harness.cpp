#include "hil/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace hil::harness {

namespace {

using protocol::DownlinkMessage;
using protocol::UplinkMessage;

void require(bool ok, const char* message)
{
    if (!ok)
        throw std::invalid_argument(message);
}

struct Response {
    std::optional<protocol::Velocity> velocity;
    std::optional<protocol::YawRate> yaw_rate;
    bool land = false;

    bool complete() const noexcept { return land || (velocity && yaw_rate); }
};

Response read_response(transport::ByteStream& bytes, protocol::LineAssembler& lines)
{
    Response r;
    char buf[256];
    while (!r.complete()) {
        const auto n = bytes.read_some(buf);
        if (n == 0)
            throw transport::TransportError("DUT closed the byte stream");
        for (const auto& line : lines.feed({buf, n})) {
            const DownlinkMessage msg = protocol::parse_downlink(line);
            if (const auto* v = std::get_if<protocol::Velocity>(&msg))
                r.velocity = *v;
            else if (const auto* w = std::get_if<protocol::YawRate>(&msg))
                r.yaw_rate = *w;
            else
                r.land = true;
        }
    }
    return r;
}

double rms(const std::vector<double>& v)
{
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void TrialConfig::validate() const
{
    require(altitude_min > sim::min_render_altitude && altitude_min <= altitude_max,
            "start altitude range must be non-empty and above the render floor");
    require(altitude_max < 100.0, "start altitude must stay below 100 m");
    require(yaw_min <= yaw_max, "yaw range must be non-empty");
    require(control_period > 0.0 && std::isfinite(control_period), "control_period must be > 0");
    require(frame_rate > 0.0 && std::abs(frame_rate * control_period - 1.0) < 1e-9,
            "frame_rate must equal one frame per control period");
    require(timeout > 0.0 && std::isfinite(timeout), "timeout must be > 0");
    require(loss_frames >= 1, "loss_frames must be >= 1");
    require(view_margin >= 0.0 && view_margin < 1.0, "view_margin must lie in [0, 1)");
    require(sensor.altitude_noise_sigma >= 0.0, "sensor noise sigma must be >= 0");
    require(sensor.quantization >= 0.0, "sensor quantization must be >= 0");
    require(dynamics.lag_tau >= 0.0, "dynamics lag must be >= 0");
    require(dynamics.auto_land_speed > 0.0, "auto-land speed must be > 0");
    if (start)
        require(start->altitude() > sim::min_render_altitude && start->altitude() < 100.0,
                "fixed start altitude must lie in (0.05, 100) m");
    require(luminance.ground != luminance.figure, "ground and figure luminance must differ");
    vision.validate();
    control.validate(false);
    camera.validate();
    marker.validate();
}

std::string_view to_string(Outcome outcome) noexcept
{
    switch (outcome) {
    case Outcome::Success: return "Success";
    case Outcome::MarkerLost: return "MarkerLost";
    case Outcome::Timeout: return "Timeout";
    case Outcome::TransportError: return "TransportError";
    }
    return "Unknown";
}

double max_start_offset(double altitude_m, const TrialConfig& config)
{
    const auto& cam = config.camera;
    const double half_view = 0.5 * std::min(cam.width, cam.height) * altitude_m / cam.f_px;
    return std::max(0.0, (1.0 - config.view_margin) * half_view - config.marker.bounding_radius());
}

sim::DroneState sample_start(Rng& rng, const TrialConfig& config)
{
    sim::DroneState s;
    const double h = rng.uniform(config.altitude_min, config.altitude_max);
    const double yaw = rng.uniform(config.yaw_min, config.yaw_max);
    const double r = max_start_offset(h, config) * std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    s.down = -h;
    s.yaw = sim::normalize_angle(yaw);
    s.north = config.marker.pose.north + r * std::cos(phi);
    s.east = config.marker.pose.east + r * std::sin(phi);
    return s;
}

// ---------------------------------------------------------------------------
// DUT

DutNode::DutNode(const TrialConfig& config)
    : camera_(config.camera), marker_(config.marker), vision_(config.vision), controller_(config.control)
{}

std::optional<UplinkMessage> DutNode::next_message(transport::ByteStream& bytes)
{
    char buf[512];
    while (pending_.empty()) {
        const auto n = bytes.read_some(buf);
        if (n == 0)
            return std::nullopt;
        for (auto& m : scanner_.feed({buf, n}))
            pending_.push_back(m);
    }
    auto m = pending_.front();
    pending_.pop_front();
    return m;
}

bool DutNode::service(transport::Endpoint& link)
{
    while (!started_) {
        const auto m = next_message(*link.bytes);
        if (!m)
            return false;
        if (const auto* t = std::get_if<protocol::Trigger>(&*m); t && t->code == protocol::start_trigger_code)
            started_ = true;
    }

    const auto frame = link.frames->receive();
    if (!frame)
        return false;

    std::optional<double> reading;
    while (!reading) {
        const auto m = next_message(*link.bytes);
        if (!m)
            return false;
        reading = altitude_.push(*m);
    }

    const double h = controller_.filter_altitude(*reading);
    std::optional<control::PoseError> err;
    last_detected_ = false;
    const auto stage = controller_.stage();
    if ((stage == control::LandingStage::Align || stage == control::LandingStage::Descend) &&
        h > sim::min_render_altitude) {
        if (const auto pose = vision::detect(*frame, h, camera_, marker_, vision_)) {
            err = control::pixel_to_metric(*pose, h, camera_);
            last_detected_ = true;
        }
    }

    const auto cmd = controller_.update(err, h);
    std::string out;
    if (cmd.final_land || controller_.stage() == control::LandingStage::Done) {
        out = protocol::encode_downlink(protocol::Land{});
    } else {
        out = protocol::encode_downlink(protocol::Velocity{cmd.vx, cmd.vy, cmd.vz});
        out += protocol::encode_downlink(protocol::YawRate{cmd.omega_yaw});
    }
    link.bytes->write(out);
    return true;
}

void DutNode::run(transport::Endpoint& link)
{
    while (service(link)) {
    }
}

// ---------------------------------------------------------------------------
// World

TrialResult run_world(const TrialConfig& config, transport::Endpoint& world,
                      const std::function<void()>& service_dut, const FrameSink& frames)
{
    TrialResult result;
    result.seed = config.seed;

    Rng rng(config.seed);
    sim::DroneState state = config.start ? *config.start : sample_start(rng, config);
    result.start = state;

    const double dt = config.control_period;
    const double vz_sign = config.control.vz_descend_is_positive_down ? 1.0 : -1.0;
    const GrayFrame blank(config.camera.width, config.camera.height, config.luminance.ground);
    protocol::LineAssembler lines;
    bool auto_landing = false;
    int lost = 0;
    long period = 0;

    auto finish = [&](Outcome outcome, std::string detail) {
        result.outcome = outcome;
        result.detail = std::move(detail);
        result.duration = static_cast<double>(period) * dt;
        result.final_err_x = state.north - config.marker.pose.north;
        result.final_err_y = state.east - config.marker.pose.east;
        result.final_err_theta = sim::normalize_angle(state.yaw - config.marker.pose.yaw);
        return result;
    };

    try {
        world.bytes->write(protocol::encode_trigger(protocol::start_trigger_code));
        while (true) {
            const double sensed = sim::sense_altitude(state, config.sensor, rng);
            const auto alt = protocol::encode_altitude(std::min(sensed, 99.99));
            world.bytes->write(alt[0] + alt[1]);

            GrayFrame frame = state.altitude() > sim::min_render_altitude
                                  ? sim::render_camera(state, config.camera, config.marker, config.luminance)
                                  : blank;
            if (frames)
                frames(static_cast<int>(period), frame);
            world.frames->send(std::move(frame));
            ++result.frames;

            if (service_dut)
                service_dut();
            const Response r = read_response(*world.bytes, lines);

            control::ControlOutput cmd;
            if (r.land)
                auto_landing = true;
            if (auto_landing) {
                cmd = sim::auto_land_command(config.dynamics);
            } else {
                cmd.vx = r.velocity->vx;
                cmd.vy = r.velocity->vy;
                cmd.vz = vz_sign * r.velocity->vz;
                cmd.omega_yaw = r.yaw_rate->omega;
            }

            state = sim::step_dynamics(state, cmd, dt, config.dynamics);
            ++period;

            if (config.record_trajectory) {
                result.trajectory.push_back({static_cast<double>(period) * dt, state.north, state.east,
                                             state.altitude(), state.yaw});
            }

            if (sim::is_touchdown(state))
                return finish(Outcome::Success, "");
            lost = sim::marker_center_in_view(state, config.camera, config.marker) ? 0 : lost + 1;
            if (lost > config.loss_frames)
                return finish(Outcome::MarkerLost, "marker out of view for " + std::to_string(lost) + " frames");
            if (static_cast<double>(period) * dt >= config.timeout - 1e-9)
                return finish(Outcome::Timeout, "no touchdown within the timeout");
        }
    } catch (const transport::TransportError& e) {
        return finish(Outcome::TransportError, e.what());
    } catch (const protocol::MalformedMessage& e) {
        return finish(Outcome::TransportError, std::string("malformed downlink: ") + e.what());
    }
}

TrialResult run_trial(const TrialConfig& config, const FrameSink& frames)
{
    config.validate();
    auto params = config.transport;
    if (params.kind == transport::Kind::Serial) {
        auto link = transport::attach_transport(params);
        auto r = run_world(config, link.world, {}, frames);
        link.world.close();
        return r;
    }

    auto link = transport::attach_transport(params);
    DutNode dut(config);

    if (params.kind == transport::Kind::InProcess) {
        // Co-scheduled: the DUT serves each period right after the frame is sent.
        TrialResult r = run_world(config, link.world,
                                  [&] {
                                      if (!dut.service(link.dut))
                                          throw transport::TransportError("DUT link closed");
                                  },
                                  frames);
        link.world.close();
        link.dut.close();
        return r;
    }

    std::exception_ptr dut_error;
    std::thread dut_thread([&] {
        try {
            dut.run(link.dut);
        } catch (...) {
            dut_error = std::current_exception();
        }
        link.dut.close();
    });
    TrialResult r = run_world(config, link.world, {}, frames);
    link.world.close();
    dut_thread.join();
    if (dut_error && r.success()) {
        try {
            std::rethrow_exception(dut_error);
        } catch (const std::exception& e) {
            r.outcome = Outcome::TransportError;
            r.detail = e.what();
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Campaign

CampaignReport summarize(std::uint64_t master_seed, std::vector<TrialResult> trials)
{
    CampaignReport rep;
    rep.master_seed = master_seed;
    rep.n_trials = static_cast<int>(trials.size());
    std::vector<double> ex, ey, et, durations;
    for (const auto& t : trials) {
        if (!t.success())
            continue;
        ++rep.success_count;
        ex.push_back(t.final_err_x);
        ey.push_back(t.final_err_y);
        et.push_back(t.final_err_theta);
        durations.push_back(t.duration);
    }
    rep.success_pct = rep.n_trials > 0 ? 100.0 * rep.success_count / rep.n_trials : 0.0;
    rep.mse_x = rms(ex);
    rep.mse_y = rms(ey);
    rep.mse_theta = rms(et);

    if (durations.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rep.time = {nan, nan, nan, nan};
    } else {
        std::sort(durations.begin(), durations.end());
        double sum = 0.0;
        for (double d : durations)
            sum += d;
        const std::size_t n = durations.size();
        rep.time.mean = sum / static_cast<double>(n);
        rep.time.median = n % 2 ? durations[n / 2] : 0.5 * (durations[n / 2 - 1] + durations[n / 2]);
        rep.time.min = durations.front();
        rep.time.max = durations.back();
    }
    rep.trials = std::move(trials);
    return rep;
}

CampaignReport run_campaign(const TrialConfig& config, int n, int jobs,
                            const std::function<void(int, const TrialResult&)>& progress)
{
    if (n < 1)
        throw std::invalid_argument("campaign needs at least one trial");
    if (jobs < 1)
        throw std::invalid_argument("jobs must be >= 1");
    config.validate();

    std::vector<TrialResult> results(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::mutex progress_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        try {
            for (int i = next++; i < n; i = next++) {
                TrialConfig c = config;
                c.seed = config.seed + static_cast<std::uint64_t>(i);
                results[static_cast<std::size_t>(i)] = run_trial(c);
                if (progress) {
                    std::lock_guard lock(progress_mutex);
                    progress(i, results[static_cast<std::size_t>(i)]);
                }
            }
        } catch (...) {
            std::lock_guard lock(progress_mutex);
            if (!error)
                error = std::current_exception();
            next = n;
        }
    };

    const int workers = std::min(jobs, n);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < workers; ++j)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
    return summarize(config.seed, std::move(results));
}

}  // namespace hil::harness
