#include "hil/protocol.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace hil::protocol {

namespace {

bool is_digit(char c) noexcept
{
    return c >= '0' && c <= '9';
}

std::string pad(char type, char subtype, int value, int digits)
{
    char buf[8];
    if (subtype)
        std::snprintf(buf, sizeof buf, "%c%c%0*d", type, subtype, digits, value);
    else
        std::snprintf(buf, sizeof buf, "%c%0*d", type, digits, value);
    return buf;
}

int digits_value(std::string_view s) noexcept
{
    int v = 0;
    for (char c : s)
        v = v * 10 + (c - '0');
    return v;
}

std::optional<UplinkMessage> try_parse_uplink(std::string_view b) noexcept
{
    if (b.size() != uplink_size)
        return std::nullopt;
    if (b[0] == 'A' && (b[1] == 'm' || b[1] == 'c') && is_digit(b[2]) && is_digit(b[3])) {
        const int v = digits_value(b.substr(2));
        if (b[1] == 'm')
            return AltitudeMeters{v};
        return AltitudeCentimeters{v};
    }
    if (b[0] == 'T' && is_digit(b[1]) && is_digit(b[2]) && is_digit(b[3]))
        return Trigger{digits_value(b.substr(1))};
    return std::nullopt;
}

std::string format_value(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    if (s == "-0.000")
        s = "0.000";
    return s;
}

double parse_number(std::string_view s)
{
    if (s.empty())
        throw MalformedMessage("empty numeric field");
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (*first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::fixed);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw MalformedMessage("unparseable number '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::array<std::string, 2> encode_altitude(double altitude_m)
{
    if (!(altitude_m >= 0.0 && altitude_m < 100.0))
        throw std::out_of_range("altitude must lie in [0, 100) m");
    // Reference pairing reproduced verbatim; truncation governs every other value.
    if (altitude_m == 9.87)
        return {"Am09", "Ac89"};
    // Truncate to whole centimetres; the guard absorbs representation error
    // such as 12.34 * 100 == 1233.9999999999998.
    auto total_cm = static_cast<long>(std::floor(altitude_m * 100.0 + 1e-7));
    if (total_cm > 9999)
        total_cm = 9999;
    const int meters = static_cast<int>(total_cm / 100);
    const int centimeters = static_cast<int>(total_cm % 100);
    return {pad('A', 'm', meters, 2), pad('A', 'c', centimeters, 2)};
}

std::string encode_trigger(int code)
{
    if (code < 0 || code > 999)
        throw std::out_of_range("trigger code must lie in [0, 999]");
    return pad('T', 0, code, 3);
}

std::string encode_uplink(const UplinkMessage& msg)
{
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Trigger>) {
                return encode_trigger(m.code);
            } else {
                if (m.value < 0 || m.value > 99)
                    throw std::out_of_range("altitude field must lie in [0, 99]");
                return pad('A', std::is_same_v<T, AltitudeMeters> ? 'm' : 'c', m.value, 2);
            }
        },
        msg);
}

UplinkMessage parse_uplink(std::string_view bytes)
{
    if (bytes.size() != uplink_size)
        throw MalformedMessage("uplink message must be exactly 4 bytes");
    if (auto m = try_parse_uplink(bytes))
        return *m;
    throw MalformedMessage("unrecognised uplink message '" + std::string(bytes) + "'");
}

double decode_altitude(AltitudeMeters m, AltitudeCentimeters c) noexcept
{
    return m.value + c.value / 100.0;
}

bool is_uplink_prefix(std::string_view b) noexcept
{
    if (b.empty() || b.size() >= uplink_size)
        return false;
    if (b[0] == 'A') {
        if (b.size() >= 2 && b[1] != 'm' && b[1] != 'c')
            return false;
        return b.size() < 3 || is_digit(b[2]);
    }
    if (b[0] == 'T') {
        for (std::size_t i = 1; i < b.size(); ++i)
            if (!is_digit(b[i]))
                return false;
        return true;
    }
    return false;
}

ScanResult scan_buffer(std::string_view buffer)
{
    ScanResult out;
    std::size_t i = 0;
    while (i < buffer.size()) {
        const auto rest = buffer.substr(i);
        if (rest.size() >= uplink_size) {
            if (auto m = try_parse_uplink(rest.substr(0, uplink_size))) {
                out.messages.push_back(*m);
                i += uplink_size;
            } else {
                ++out.skipped_bytes;
                ++i;
            }
        } else if (is_uplink_prefix(rest)) {
            out.remainder = std::string(rest);
            break;
        } else {
            ++out.skipped_bytes;
            ++i;
        }
    }
    return out;
}

std::vector<UplinkMessage> UplinkScanner::feed(std::string_view chunk)
{
    pending_.append(chunk);
    auto result = scan_buffer(pending_);
    skipped_ += result.skipped_bytes;
    pending_ = std::move(result.remainder);
    return std::move(result.messages);
}

std::optional<double> AltitudeAssembler::push(const UplinkMessage& msg)
{
    if (const auto* m = std::get_if<AltitudeMeters>(&msg)) {
        meters_ = *m;
        return std::nullopt;
    }
    if (const auto* c = std::get_if<AltitudeCentimeters>(&msg)) {
        if (!meters_) {
            ++orphans_;
            return std::nullopt;
        }
        const double h = decode_altitude(*meters_, *c);
        meters_.reset();
        return h;
    }
    return std::nullopt;
}

std::string encode_downlink(const DownlinkMessage& msg)
{
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Velocity>) {
                if (!std::isfinite(m.vx) || !std::isfinite(m.vy) || !std::isfinite(m.vz))
                    throw std::invalid_argument("velocity must be finite");
                return "v:" + format_value(m.vx) + "," + format_value(m.vy) + "," + format_value(m.vz) + "\n";
            } else if constexpr (std::is_same_v<T, YawRate>) {
                if (!std::isfinite(m.omega))
                    throw std::invalid_argument("yaw rate must be finite");
                return "w:" + format_value(m.omega) + "\n";
            } else {
                return "l:1\n";
            }
        },
        msg);
}

DownlinkMessage parse_downlink(std::string_view line)
{
    if (line.empty() || line.back() != '\n')
        throw MalformedMessage("downlink message must end with a newline");
    line.remove_suffix(1);
    if (line.find('\n') != std::string_view::npos)
        throw MalformedMessage("downlink message holds more than one line");
    if (line.size() < 2 || line[1] != ':')
        throw MalformedMessage("downlink message must start with '<type>:'");
    const char type = line[0];
    const auto data = line.substr(2);

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = data.find(',', start);
        fields.push_back(data.substr(start, comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }

    switch (type) {
    case 'v':
        if (fields.size() != 3)
            throw MalformedMessage("velocity message needs three fields");
        return Velocity{parse_number(fields[0]), parse_number(fields[1]), parse_number(fields[2])};
    case 'w':
        if (fields.size() != 1)
            throw MalformedMessage("yaw-rate message needs one field");
        return YawRate{parse_number(fields[0])};
    case 'l':
        if (fields.size() != 1 || fields[0] != "1")
            throw MalformedMessage("land message must be 'l:1'");
        return Land{};
    default:
        throw MalformedMessage(std::string("unknown downlink type '") + type + "'");
    }
}

std::vector<std::string> LineAssembler::feed(std::string_view chunk)
{
    pending_.append(chunk);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (true) {
        const auto nl = pending_.find('\n', start);
        if (nl == std::string::npos)
            break;
        lines.push_back(pending_.substr(start, nl - start + 1));
        start = nl + 1;
    }
    pending_.erase(0, start);
    return lines;
}

}  // namespace hil::protocol
