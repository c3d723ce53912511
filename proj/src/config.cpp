#include "hil/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

namespace hil::config {

using nlohmann::json;

namespace {

class Writer {
public:
    explicit Writer(json& node) : node_(node) {}

    template <class T>
    void field(const char* key, const T& value)
    {
        if constexpr (std::is_same_v<T, std::uint8_t>)
            node_[key] = static_cast<int>(value);
        else if constexpr (std::is_same_v<T, transport::Kind>)
            node_[key] = std::string(transport::to_string(value));
        else if constexpr (std::is_same_v<T, std::chrono::milliseconds>)
            node_[key] = value.count();
        else
            node_[key] = value;
    }

    template <class Fn>
    void section(const char* key, Fn&& fn)
    {
        json child = json::object();
        Writer w(child);
        fn(w);
        node_[key] = std::move(child);
    }

private:
    json& node_;
};

class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object())
            fail("expected an object");
    }

    template <class T>
    void field(const char* key, T& out)
    {
        if (!node_.contains(key))
            return;
        seen_.insert(key);
        const json& v = node_.at(key);
        const std::string where = path_ + key;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean())
                fail_at(where, "expected true or false");
            out = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string())
                fail_at(where, "expected a string");
            out = v.get<std::string>();
        } else if constexpr (std::is_same_v<T, transport::Kind>) {
            if (!v.is_string())
                fail_at(where, "expected a string");
            try {
                out = transport::parse_kind(v.get<std::string>());
            } catch (const std::invalid_argument& e) {
                fail_at(where, e.what());
            }
        } else if constexpr (std::is_same_v<T, std::chrono::milliseconds>) {
            std::int64_t ms = 0;
            read_integer(v, where, ms, 0, std::numeric_limits<std::int64_t>::max());
            out = std::chrono::milliseconds{ms};
        } else if constexpr (std::is_integral_v<T>) {
            read_integer(v, where, out, std::numeric_limits<T>::min(), std::numeric_limits<T>::max());
        } else {
            static_assert(std::is_floating_point_v<T>);
            if (!v.is_number())
                fail_at(where, "expected a number");
            out = v.get<T>();
        }
    }

    template <class Fn>
    void section(const char* key, Fn&& fn)
    {
        if (!node_.contains(key))
            return;
        seen_.insert(key);
        Reader r(node_.at(key), path_ + key + ".");
        fn(r);
        r.finish();
    }

    void finish() const
    {
        for (const auto& [key, _] : node_.items())
            if (!seen_.count(key))
                fail_at(path_ + key, "unknown key");
    }

private:
    template <class T>
    static void read_integer(const json& v, const std::string& where, T& out, std::int64_t lo, std::int64_t hi)
    {
        if (!v.is_number_integer())
            fail_at(where, "expected an integer");
        if (v.is_number_unsigned()) {
            const auto u = v.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(hi))
                fail_at(where, "value out of range");
            out = static_cast<T>(u);
            return;
        }
        const auto i = v.get<std::int64_t>();
        if (i < lo || i > hi)
            fail_at(where, "value out of range");
        out = static_cast<T>(i);
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        fail_at(path_.empty() ? "<root>" : path_.substr(0, path_.size() - 1), what);
    }

    [[noreturn]] static void fail_at(const std::string& where, const std::string& what)
    {
        throw ConfigError("config " + where + ": " + what);
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class B, class C>
void bind(B& b, C& c)
{
    b.field("seed", c.seed);
    b.section("harness", [&](B& s) {
        s.field("altitude_min", c.altitude_min);
        s.field("altitude_max", c.altitude_max);
        s.field("yaw_min", c.yaw_min);
        s.field("yaw_max", c.yaw_max);
        s.field("control_period", c.control_period);
        s.field("frame_rate", c.frame_rate);
        s.field("timeout", c.timeout);
        s.field("loss_frames", c.loss_frames);
        s.field("view_margin", c.view_margin);
        s.field("record_trajectory", c.record_trajectory);
    });
    b.section("vision", [&](B& s) {
        auto& v = c.vision;
        s.field("blur_radius", v.blur_radius);
        s.field("blur_sigma", v.blur_sigma);
        s.field("tile_size", v.tile_size);
        s.field("threshold_offset", v.threshold_offset);
        s.field("dark_foreground", v.dark_foreground);
        s.field("noise_floor_px", v.noise_floor_px);
        s.field("tolerance_frac", v.tolerance_frac);
        s.field("ring_fill_min", v.ring_fill_min);
        s.field("ring_fill_max", v.ring_fill_max);
        s.field("solid_fill_min", v.solid_fill_min);
    });
    b.section("control", [&](B& s) {
        auto& p = c.control;
        s.section("gains", [&](B& g) {
            g.field("k1", p.gains.k1);
            g.field("k2", p.gains.k2);
            g.field("k3", p.gains.k3);
        });
        s.field("align_pos_tol", p.align_pos_tol);
        s.field("align_yaw_tol", p.align_yaw_tol);
        s.field("h_land", p.h_land);
        s.field("vz_descend_is_positive_down", p.vz_descend_is_positive_down);
        s.section("limits", [&](B& l) {
            l.field("lateral", p.limits.lateral);
            l.field("vertical", p.limits.vertical);
            l.field("yaw_rate", p.limits.yaw_rate);
        });
        s.field("altitude_average_window", p.altitude_average_window);
    });
    b.section("camera", [&](B& s) {
        s.field("width", c.camera.width);
        s.field("height", c.camera.height);
        s.field("f_px", c.camera.f_px);
        s.field("x_sign", c.camera.x_sign);
        s.field("y_sign", c.camera.y_sign);
    });
    b.section("marker", [&](B& s) {
        auto& m = c.marker;
        s.field("ring_inner_r", m.ring_inner_r);
        s.field("ring_outer_r", m.ring_outer_r);
        s.field("square_side", m.square_side);
        s.field("square_offset", m.square_offset);
        s.field("rect_long", m.rect_long);
        s.field("rect_short", m.rect_short);
        s.field("rect_offset", m.rect_offset);
        s.section("pose", [&](B& p) {
            p.field("north", m.pose.north);
            p.field("east", m.pose.east);
            p.field("yaw", m.pose.yaw);
        });
    });
    b.section("sensor", [&](B& s) {
        s.field("altitude_noise_sigma", c.sensor.altitude_noise_sigma);
        s.field("quantization", c.sensor.quantization);
    });
    b.section("dynamics", [&](B& s) {
        s.field("lag_tau", c.dynamics.lag_tau);
        s.field("auto_land_speed", c.dynamics.auto_land_speed);
    });
    b.section("scene", [&](B& s) {
        s.field("ground_luminance", c.luminance.ground);
        s.field("figure_luminance", c.luminance.figure);
    });
    b.section("transport", [&](B& s) {
        auto& t = c.transport;
        s.field("kind", t.kind);
        s.field("max_chunk", t.max_chunk);
        s.field("read_timeout_ms", t.read_timeout);
        s.field("host", t.host);
        s.field("port", t.port);
        s.field("device", t.device);
        s.field("baud", t.baud);
        s.field("frame_host", t.frame_host);
        s.field("frame_port", t.frame_port);
    });
}

}  // namespace

json to_json(const harness::TrialConfig& config)
{
    json root = json::object();
    Writer w(root);
    bind(w, config);
    return root;
}

harness::TrialConfig from_json(const json& j)
{
    harness::TrialConfig c;
    Reader r(j, "");
    bind(r, c);
    r.finish();
    try {
        c.validate();
        c.control.validate(true);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return c;
}

harness::TrialConfig load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

void save(const std::filesystem::path& path, const harness::TrialConfig& config)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write config " + path.string());
    out << to_json(config).dump(2) << '\n';
}

}  // namespace hil::config
