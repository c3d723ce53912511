#pragma once

#include "hil/image.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hil::transport {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One direction-pair endpoint of a byte stream. Delivery is ordered and
/// byte exact but may be chunked arbitrarily.
class ByteStream {
public:
    virtual ~ByteStream() = default;

    virtual void write(std::string_view bytes) = 0;

    /// Blocks until at least one byte is available; returns 0 once the peer
    /// has closed and everything was drained.
    virtual std::size_t read_some(std::span<char> buffer) = 0;

    virtual void close() = 0;
};

/// Carries whole frames; stands in for the video link.
class FrameChannel {
public:
    virtual ~FrameChannel() = default;

    virtual void send(GrayFrame frame) = 0;

    /// Empty once the peer has closed.
    virtual std::optional<GrayFrame> receive() = 0;

    virtual void close() = 0;
};

struct Endpoint {
    std::unique_ptr<ByteStream> bytes;
    std::unique_ptr<FrameChannel> frames;

    void close()
    {
        if (bytes)
            bytes->close();
        if (frames)
            frames->close();
    }
};

struct Link {
    Endpoint world;
    Endpoint dut;
};

enum class Kind { InProcess, Tcp, Serial };

std::string_view to_string(Kind kind) noexcept;
Kind parse_kind(std::string_view name);

struct Params {
    Kind kind = Kind::InProcess;
    /// In-process only: cap on bytes returned per read, 0 for no cap.
    std::size_t max_chunk = 0;
    /// Blocking reads give up after this long with a TransportError.
    std::chrono::milliseconds read_timeout{30'000};
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks an ephemeral port
    std::string device;
    int baud = 115200;
    /// Serial only: optional TCP address a remote DUT listens on for frames.
    std::string frame_host;
    std::uint16_t frame_port = 0;
};

/// Both ends of an in-process queue pair.
Link make_inproc_link(std::size_t max_chunk = 0,
                      std::chrono::milliseconds read_timeout = std::chrono::milliseconds{30'000});

/// Both ends over loopback TCP: one connection for bytes, one for frames.
Link make_tcp_link(const std::string& host = "127.0.0.1", std::uint16_t port = 0);

/// Wraps an open file descriptor (socket, tty, pipe); takes ownership.
std::unique_ptr<ByteStream> make_fd_stream(int fd);

/// Opens a serial device in raw 8N1 mode.
std::unique_ptr<ByteStream> open_serial(const std::string& device, int baud);

/// Frames over a stream socket: 8-byte big-endian (width, height) header
/// followed by width x height luminance bytes.
std::unique_ptr<FrameChannel> make_fd_frame_channel(int fd);

/// Connects to a listening frame receiver.
std::unique_ptr<FrameChannel> connect_frame_channel(const std::string& host, std::uint16_t port);

/// Discards every frame; used when the DUT receives video by other means.
std::unique_ptr<FrameChannel> make_null_frame_channel();

/// Creates the endpoints for `params.kind`. Serial opens only the world end
/// (the DUT is a physical device) and leaves `dut` empty.
Link attach_transport(const Params& params);

std::array<std::uint8_t, 8> encode_frame_header(const GrayFrame& frame) noexcept;
std::pair<int, int> decode_frame_header(std::span<const std::uint8_t, 8> header);

}  // namespace hil::transport
