#include "hil/protocol.hpp"
#include "hil/transport.hpp"

#include <doctest.h>

#include <fcntl.h>
#include <stdlib.h>
#include <thread>
#include <unistd.h>

using namespace hil;
using namespace hil::transport;

namespace {

std::string read_exactly(ByteStream& s, std::size_t n)
{
    std::string out;
    char buf[64];
    while (out.size() < n) {
        const auto k = s.read_some(std::span<char>(buf, std::min(sizeof buf, n - out.size())));
        REQUIRE(k > 0);
        out.append(buf, k);
    }
    return out;
}

GrayFrame gradient(int w, int h)
{
    GrayFrame f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            f.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) & 0xff);
    return f;
}

}  // namespace

TEST_CASE("in-process loopback")
{
    auto link = make_inproc_link();
    link.world.bytes->write("Am09");
    CHECK(read_exactly(*link.dut.bytes, 4) == "Am09");
    link.dut.bytes->write("l:1\n");
    CHECK(read_exactly(*link.world.bytes, 4) == "l:1\n");

    const auto f = gradient(32, 16);
    link.world.frames->send(f);
    const auto got = link.dut.frames->receive();
    REQUIRE(got);
    CHECK(*got == f);

    link.world.close();
    char c;
    CHECK(link.dut.bytes->read_some(std::span<char>(&c, 1)) == 0);
    CHECK_FALSE(link.dut.frames->receive());
}

TEST_CASE("one-byte chunking gives the same scan result")
{
    auto link = make_inproc_link(1);
    const std::string stream = "T111Am09Ac89xAm07Ac05";
    link.world.bytes->write(stream);
    link.world.close();

    protocol::UplinkScanner scanner;
    std::vector<protocol::UplinkMessage> got;
    char buf[16];
    while (true) {
        const auto n = link.dut.bytes->read_some(buf);
        if (n == 0)
            break;
        CHECK(n == 1);
        for (auto& m : scanner.feed({buf, n}))
            got.push_back(m);
    }
    CHECK(got == protocol::scan_buffer(stream).messages);
    CHECK(got.size() == 5);
}

TEST_CASE("in-process reads time out instead of hanging")
{
    auto link = make_inproc_link(0, std::chrono::milliseconds{20});
    char c;
    CHECK_THROWS_AS(link.dut.bytes->read_some(std::span<char>(&c, 1)), TransportError);
}

TEST_CASE("frame header is big-endian width then height")
{
    const auto h = encode_frame_header(GrayFrame(1280, 720));
    CHECK(h == std::array<std::uint8_t, 8>{0, 0, 5, 0, 0, 0, 2, 0xd0});
    CHECK(decode_frame_header(h) == std::pair{1280, 720});
    const std::array<std::uint8_t, 8> zero{};
    CHECK_THROWS_AS(decode_frame_header(zero), TransportError);
}

TEST_CASE("tcp loopback carries bytes and large frames")
{
    auto link = make_tcp_link();
    const auto f = gradient(1280, 720);
    // A full frame exceeds the socket buffer, so the sender needs its own thread.
    std::thread sender([&] {
        link.world.frames->send(f);
        link.world.bytes->write("T111");
    });
    const auto got = link.dut.frames->receive();
    REQUIRE(got);
    CHECK(*got == f);
    CHECK(read_exactly(*link.dut.bytes, 4) == "T111");
    sender.join();

    link.dut.bytes->write("v:0.100,0.200,0.300\n");
    CHECK(read_exactly(*link.world.bytes, 20) == "v:0.100,0.200,0.300\n");

    link.world.close();
    char c;
    CHECK(link.dut.bytes->read_some(std::span<char>(&c, 1)) == 0);
    CHECK_FALSE(link.dut.frames->receive());
}

TEST_CASE("attach_transport")
{
    Params p;
    p.kind = Kind::InProcess;
    auto a = attach_transport(p);
    CHECK(a.dut.bytes);
    p.kind = Kind::Tcp;
    auto b = attach_transport(p);
    CHECK(b.dut.frames);
    p.kind = Kind::Serial;
    CHECK_THROWS_AS(attach_transport(p), TransportError);
    p.device = "/nonexistent/tty";
    CHECK_THROWS_WITH_AS(attach_transport(p), doctest::Contains("No such file"), TransportError);
    CHECK(parse_kind("tcp") == Kind::Tcp);
    CHECK_THROWS_AS(parse_kind("usb"), std::invalid_argument);
}

TEST_CASE("serial device over a pseudo-terminal")
{
    const int master = ::posix_openpt(O_RDWR | O_NOCTTY);
    REQUIRE(master >= 0);
    REQUIRE(::grantpt(master) == 0);
    REQUIRE(::unlockpt(master) == 0);
    const std::string slave = ::ptsname(master);

    auto world = open_serial(slave, 115200);
    auto dut = make_fd_stream(master);
    world->write("T111Am05Ac42");
    CHECK(read_exactly(*dut, 12) == "T111Am05Ac42");
    dut->write("w:-0.500\n");
    CHECK(read_exactly(*world, 9) == "w:-0.500\n");
    CHECK_THROWS_AS(open_serial(slave, 12345), TransportError);
}
