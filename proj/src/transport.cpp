#include "hil/transport.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fcntl.h>
#include <mutex>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <termios.h>
#include <unistd.h>

namespace hil::transport {

namespace {

[[noreturn]] void throw_errno(const std::string& what)
{
    throw TransportError(what + ": " + std::strerror(errno));
}

// ---------------------------------------------------------------------------
// In-process

class Pipe {
public:
    void write(std::string_view bytes)
    {
        {
            std::lock_guard lock(mutex_);
            if (closed_)
                throw TransportError("write to a closed in-process stream");
            buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
        }
        cv_.notify_all();
    }

    std::size_t read_some(std::span<char> out, std::size_t max_chunk, std::chrono::milliseconds timeout)
    {
        std::unique_lock lock(mutex_);
        if (!cv_.wait_for(lock, timeout, [&] { return !buffer_.empty() || closed_; }))
            throw TransportError("timed out waiting for in-process bytes");
        std::size_t n = std::min(out.size(), buffer_.size());
        if (max_chunk > 0)
            n = std::min(n, max_chunk);
        std::copy_n(buffer_.begin(), n, out.begin());
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n));
        return n;
    }

    void close()
    {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<char> buffer_;
    bool closed_ = false;
};

class InProcStream final : public ByteStream {
public:
    InProcStream(std::shared_ptr<Pipe> rx, std::shared_ptr<Pipe> tx, std::size_t max_chunk,
                 std::chrono::milliseconds timeout)
        : rx_(std::move(rx)), tx_(std::move(tx)), max_chunk_(max_chunk), timeout_(timeout)
    {}

    ~InProcStream() override { close(); }

    void write(std::string_view bytes) override { tx_->write(bytes); }

    std::size_t read_some(std::span<char> buffer) override { return rx_->read_some(buffer, max_chunk_, timeout_); }

    void close() override { tx_->close(); }

private:
    std::shared_ptr<Pipe> rx_, tx_;
    std::size_t max_chunk_;
    std::chrono::milliseconds timeout_;
};

class FrameQueue {
public:
    void push(GrayFrame f)
    {
        {
            std::lock_guard lock(mutex_);
            if (closed_)
                throw TransportError("send on a closed in-process frame channel");
            frames_.push_back(std::move(f));
        }
        cv_.notify_all();
    }

    std::optional<GrayFrame> pop(std::chrono::milliseconds timeout)
    {
        std::unique_lock lock(mutex_);
        if (!cv_.wait_for(lock, timeout, [&] { return !frames_.empty() || closed_; }))
            throw TransportError("timed out waiting for an in-process frame");
        if (frames_.empty())
            return std::nullopt;
        auto f = std::move(frames_.front());
        frames_.pop_front();
        return f;
    }

    void close()
    {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<GrayFrame> frames_;
    bool closed_ = false;
};

class InProcFrames final : public FrameChannel {
public:
    InProcFrames(std::shared_ptr<FrameQueue> rx, std::shared_ptr<FrameQueue> tx, std::chrono::milliseconds timeout)
        : rx_(std::move(rx)), tx_(std::move(tx)), timeout_(timeout)
    {}

    ~InProcFrames() override { close(); }

    void send(GrayFrame frame) override { tx_->push(std::move(frame)); }
    std::optional<GrayFrame> receive() override { return rx_->pop(timeout_); }
    void close() override { tx_->close(); }

private:
    std::shared_ptr<FrameQueue> rx_, tx_;
    std::chrono::milliseconds timeout_;
};

class NullFrames final : public FrameChannel {
public:
    void send(GrayFrame) override {}
    std::optional<GrayFrame> receive() override { return std::nullopt; }
    void close() override {}
};

// ---------------------------------------------------------------------------
// File descriptors

class Fd {
public:
    explicit Fd(int fd = -1) noexcept : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept
    {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }

    int get() const noexcept { return fd_; }
    int release() noexcept { return std::exchange(fd_, -1); }
    void reset() noexcept
    {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_;
};

void write_all(int fd, const void* data, std::size_t size)
{
    const auto* p = static_cast<const char*>(data);
    while (size > 0) {
        const ssize_t n = ::write(fd, p, size);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw_errno("write failed");
        }
        p += n;
        size -= static_cast<std::size_t>(n);
    }
}

std::size_t read_once(int fd, void* data, std::size_t size)
{
    while (true) {
        const ssize_t n = ::read(fd, data, size);
        if (n >= 0)
            return static_cast<std::size_t>(n);
        if (errno == EINTR)
            continue;
        // A closed pty master reports EIO once the slave side goes away.
        if (errno == EIO || errno == ECONNRESET)
            return 0;
        throw_errno("read failed");
    }
}

// False on clean EOF before the first byte.
bool read_exact(int fd, void* data, std::size_t size)
{
    auto* p = static_cast<char*>(data);
    std::size_t got = 0;
    while (got < size) {
        const auto n = read_once(fd, p + got, size - got);
        if (n == 0) {
            if (got == 0)
                return false;
            throw TransportError("stream closed mid-message");
        }
        got += n;
    }
    return true;
}

class FdStream final : public ByteStream {
public:
    explicit FdStream(int fd) : fd_(fd) {}

    void write(std::string_view bytes) override
    {
        if (fd_.get() < 0)
            throw TransportError("write to a closed stream");
        write_all(fd_.get(), bytes.data(), bytes.size());
    }

    std::size_t read_some(std::span<char> buffer) override
    {
        if (fd_.get() < 0)
            return 0;
        return read_once(fd_.get(), buffer.data(), buffer.size());
    }

    void close() override
    {
        if (fd_.get() >= 0)
            ::shutdown(fd_.get(), SHUT_WR);  // harmless ENOTSOCK on ttys
        fd_.reset();
    }

private:
    Fd fd_;
};

class FdFrames final : public FrameChannel {
public:
    explicit FdFrames(int fd) : fd_(fd) {}

    void send(GrayFrame frame) override
    {
        if (fd_.get() < 0)
            throw TransportError("send on a closed frame channel");
        const auto header = encode_frame_header(frame);
        write_all(fd_.get(), header.data(), header.size());
        write_all(fd_.get(), frame.pixels().data(), frame.pixels().size());
    }

    std::optional<GrayFrame> receive() override
    {
        if (fd_.get() < 0)
            return std::nullopt;
        std::array<std::uint8_t, 8> header{};
        if (!read_exact(fd_.get(), header.data(), header.size()))
            return std::nullopt;
        const auto [w, h] = decode_frame_header(header);
        std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
        if (!read_exact(fd_.get(), data.data(), data.size()))
            throw TransportError("frame channel closed mid-frame");
        return GrayFrame(w, h, std::move(data));
    }

    void close() override
    {
        if (fd_.get() >= 0)
            ::shutdown(fd_.get(), SHUT_WR);
        fd_.reset();
    }

private:
    Fd fd_;
};

void set_nodelay(int fd)
{
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in resolve(const std::string& host, std::uint16_t port)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0)
        throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
    ::freeaddrinfo(res);
    addr.sin_port = htons(port);
    return addr;
}

Fd connect_tcp(const sockaddr_in& addr)
{
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (fd.get() < 0)
        throw_errno("socket");
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0)
        throw_errno("connect");
    set_nodelay(fd.get());
    return fd;
}

// Listens on host:port, connects to itself and accepts; returns (server, client).
std::pair<Fd, Fd> tcp_pair(const std::string& host, std::uint16_t port)
{
    auto addr = resolve(host, port);
    Fd listener(::socket(AF_INET, SOCK_STREAM, 0));
    if (listener.get() < 0)
        throw_errno("socket");
    int one = 1;
    ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
        throw_errno("bind " + host + ":" + std::to_string(port));
    if (::listen(listener.get(), 2) < 0)
        throw_errno("listen");
    socklen_t len = sizeof addr;
    if (::getsockname(listener.get(), reinterpret_cast<sockaddr*>(&addr), &len) < 0)
        throw_errno("getsockname");

    Fd client = connect_tcp(addr);
    Fd server(::accept(listener.get(), nullptr, nullptr));
    if (server.get() < 0)
        throw_errno("accept");
    set_nodelay(server.get());
    return {std::move(server), std::move(client)};
}

speed_t baud_constant(int baud)
{
    switch (baud) {
    case 9600: return B9600;
    case 19200: return B19200;
    case 38400: return B38400;
    case 57600: return B57600;
    case 115200: return B115200;
    case 230400: return B230400;
    case 460800: return B460800;
    case 921600: return B921600;
    default: throw TransportError("unsupported baud rate " + std::to_string(baud));
    }
}

}  // namespace

std::string_view to_string(Kind kind) noexcept
{
    switch (kind) {
    case Kind::InProcess: return "inproc";
    case Kind::Tcp: return "tcp";
    case Kind::Serial: return "serial";
    }
    return "unknown";
}

Kind parse_kind(std::string_view name)
{
    if (name == "inproc")
        return Kind::InProcess;
    if (name == "tcp")
        return Kind::Tcp;
    if (name == "serial")
        return Kind::Serial;
    throw std::invalid_argument("unknown transport '" + std::string(name) + "'");
}

Link make_inproc_link(std::size_t max_chunk, std::chrono::milliseconds read_timeout)
{
    auto up = std::make_shared<Pipe>();
    auto down = std::make_shared<Pipe>();
    auto frames = std::make_shared<FrameQueue>();
    auto no_frames = std::make_shared<FrameQueue>();
    Link link;
    link.world.bytes = std::make_unique<InProcStream>(down, up, max_chunk, read_timeout);
    link.dut.bytes = std::make_unique<InProcStream>(up, down, max_chunk, read_timeout);
    link.world.frames = std::make_unique<InProcFrames>(no_frames, frames, read_timeout);
    link.dut.frames = std::make_unique<InProcFrames>(frames, no_frames, read_timeout);
    return link;
}

Link make_tcp_link(const std::string& host, std::uint16_t port)
{
    auto [byte_server, byte_client] = tcp_pair(host, port);
    // The frame connection takes the next free port when a fixed one was given.
    auto [frame_server, frame_client] = tcp_pair(host, port == 0 ? 0 : static_cast<std::uint16_t>(port + 1));
    Link link;
    link.world.bytes = make_fd_stream(byte_server.release());
    link.world.frames = make_fd_frame_channel(frame_server.release());
    link.dut.bytes = make_fd_stream(byte_client.release());
    link.dut.frames = make_fd_frame_channel(frame_client.release());
    return link;
}

std::unique_ptr<ByteStream> make_fd_stream(int fd)
{
    return std::make_unique<FdStream>(fd);
}

std::unique_ptr<FrameChannel> make_fd_frame_channel(int fd)
{
    return std::make_unique<FdFrames>(fd);
}

std::unique_ptr<FrameChannel> connect_frame_channel(const std::string& host, std::uint16_t port)
{
    return make_fd_frame_channel(connect_tcp(resolve(host, port)).release());
}

std::unique_ptr<FrameChannel> make_null_frame_channel()
{
    return std::make_unique<NullFrames>();
}

std::unique_ptr<ByteStream> open_serial(const std::string& device, int baud)
{
    const speed_t speed = baud_constant(baud);
    Fd fd(::open(device.c_str(), O_RDWR | O_NOCTTY));
    if (fd.get() < 0)
        throw_errno("cannot open serial device " + device);
    termios tio{};
    if (::tcgetattr(fd.get(), &tio) < 0)
        throw_errno("tcgetattr " + device);
    ::cfmakeraw(&tio);
    tio.c_cflag |= CLOCAL | CREAD;
    tio.c_cc[VMIN] = 1;
    tio.c_cc[VTIME] = 0;
    ::cfsetispeed(&tio, speed);
    ::cfsetospeed(&tio, speed);
    if (::tcsetattr(fd.get(), TCSANOW, &tio) < 0)
        throw_errno("tcsetattr " + device);
    return make_fd_stream(fd.release());
}

Link attach_transport(const Params& params)
{
    switch (params.kind) {
    case Kind::InProcess:
        return make_inproc_link(params.max_chunk, params.read_timeout);
    case Kind::Tcp:
        return make_tcp_link(params.host, params.port);
    case Kind::Serial: {
        if (params.device.empty())
            throw TransportError("serial transport needs a device path");
        Link link;
        link.world.bytes = open_serial(params.device, params.baud);
        link.world.frames = params.frame_port != 0
                                ? connect_frame_channel(params.frame_host.empty() ? params.host : params.frame_host,
                                                        params.frame_port)
                                : make_null_frame_channel();
        return link;
    }
    }
    throw TransportError("unknown transport kind");
}

std::array<std::uint8_t, 8> encode_frame_header(const GrayFrame& frame) noexcept
{
    const auto w = static_cast<std::uint32_t>(frame.width());
    const auto h = static_cast<std::uint32_t>(frame.height());
    return {static_cast<std::uint8_t>(w >> 24), static_cast<std::uint8_t>(w >> 16),
            static_cast<std::uint8_t>(w >> 8),  static_cast<std::uint8_t>(w),
            static_cast<std::uint8_t>(h >> 24), static_cast<std::uint8_t>(h >> 16),
            static_cast<std::uint8_t>(h >> 8),  static_cast<std::uint8_t>(h)};
}

std::pair<int, int> decode_frame_header(std::span<const std::uint8_t, 8> b)
{
    const std::uint32_t w = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
    const std::uint32_t h = (std::uint32_t{b[4]} << 24) | (std::uint32_t{b[5]} << 16) | (std::uint32_t{b[6]} << 8) | b[7];
    constexpr std::uint32_t limit = 16384;
    if (w == 0 || h == 0 || w > limit || h > limit)
        throw TransportError("frame header dimensions out of range");
    return {static_cast<int>(w), static_cast<int>(h)};
}

}  // namespace hil::transport
