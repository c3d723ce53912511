#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hil::protocol {

// Uplink (PC -> DUT): fixed 4-byte ASCII messages.
struct AltitudeMeters {
    int value = 0;  // 0..99
    friend bool operator==(const AltitudeMeters&, const AltitudeMeters&) = default;
};
struct AltitudeCentimeters {
    int value = 0;  // 0..99
    friend bool operator==(const AltitudeCentimeters&, const AltitudeCentimeters&) = default;
};
struct Trigger {
    int code = 0;  // 0..999
    friend bool operator==(const Trigger&, const Trigger&) = default;
};
using UplinkMessage = std::variant<AltitudeMeters, AltitudeCentimeters, Trigger>;

// Downlink (DUT -> PC): "c:data\n" lines.
struct Velocity {
    double vx = 0.0, vy = 0.0, vz = 0.0;
    friend bool operator==(const Velocity&, const Velocity&) = default;
};
struct YawRate {
    double omega = 0.0;
    friend bool operator==(const YawRate&, const YawRate&) = default;
};
struct Land {
    friend bool operator==(const Land&, const Land&) = default;
};
using DownlinkMessage = std::variant<Velocity, YawRate, Land>;

inline constexpr std::size_t uplink_size = 4;
inline constexpr int start_trigger_code = 111;

class MalformedMessage : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "Am" + whole metres and "Ac" + truncated centimetres, each zero-padded.
std::array<std::string, 2> encode_altitude(double altitude_m);
std::string encode_trigger(int code);
std::string encode_uplink(const UplinkMessage& msg);
UplinkMessage parse_uplink(std::string_view bytes);

/// Altitude carried by a metres/centimetres pair.
double decode_altitude(AltitudeMeters m, AltitudeCentimeters c) noexcept;

/// True when `bytes` (shorter than a full message) could still become one.
bool is_uplink_prefix(std::string_view bytes) noexcept;

struct ScanResult {
    std::vector<UplinkMessage> messages;
    std::string remainder;
    std::size_t skipped_bytes = 0;
};

/// Extracts complete messages, sliding one byte at a time past garbage. The
/// remainder is the trailing bytes that may still start a valid message.
ScanResult scan_buffer(std::string_view buffer);

/// Incremental form of scan_buffer for a byte stream read in chunks.
class UplinkScanner {
public:
    std::vector<UplinkMessage> feed(std::string_view chunk);

    const std::string& remainder() const noexcept { return pending_; }
    std::size_t skipped_bytes() const noexcept { return skipped_; }

private:
    std::string pending_;
    std::size_t skipped_ = 0;
};

/// Pairs Am with the following Ac into one altitude reading.
class AltitudeAssembler {
public:
    /// Returns an altitude once a metres message has been followed by a
    /// centimetres message. An orphan centimetres message is ignored.
    std::optional<double> push(const UplinkMessage& msg);

    std::size_t orphans() const noexcept { return orphans_; }

private:
    std::optional<AltitudeMeters> meters_;
    std::size_t orphans_ = 0;
};

std::string encode_downlink(const DownlinkMessage& msg);
DownlinkMessage parse_downlink(std::string_view line);

/// Splits a byte stream into newline-terminated lines (terminator kept).
class LineAssembler {
public:
    std::vector<std::string> feed(std::string_view chunk);

    const std::string& remainder() const noexcept { return pending_; }

private:
    std::string pending_;
};

}  // namespace hil::protocol
