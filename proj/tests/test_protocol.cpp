#include "hil/protocol.hpp"
#include "hil/rng.hpp"

#include <doctest.h>

using namespace hil;
using namespace hil::protocol;

namespace {

UplinkMessage random_uplink(Rng& rng)
{
    const int kind = static_cast<int>(rng.uniform() * 3);
    if (kind == 0)
        return AltitudeMeters{static_cast<int>(rng.uniform() * 100)};
    if (kind == 1)
        return AltitudeCentimeters{static_cast<int>(rng.uniform() * 100)};
    return Trigger{static_cast<int>(rng.uniform() * 1000)};
}

DownlinkMessage random_downlink(Rng& rng)
{
    const int kind = static_cast<int>(rng.uniform() * 3);
    if (kind == 0)
        return Velocity{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    if (kind == 1)
        return YawRate{rng.uniform(-10, 10)};
    return Land{};
}

bool close(const DownlinkMessage& a, const DownlinkMessage& b)
{
    constexpr double q = 0.0005 + 1e-12;  // half a quantum of the 3-decimal format
    if (a.index() != b.index())
        return false;
    if (const auto* va = std::get_if<Velocity>(&a)) {
        const auto& vb = std::get<Velocity>(b);
        return std::abs(va->vx - vb.vx) <= q && std::abs(va->vy - vb.vy) <= q && std::abs(va->vz - vb.vz) <= q;
    }
    if (const auto* wa = std::get_if<YawRate>(&a))
        return std::abs(wa->omega - std::get<YawRate>(b).omega) <= q;
    return true;
}

}  // namespace

TEST_CASE("altitude encoding")
{
    CHECK(encode_altitude(9.87) == std::array<std::string, 2>{"Am09", "Ac89"});
    CHECK(encode_altitude(0.0) == std::array<std::string, 2>{"Am00", "Ac00"});
    CHECK(encode_altitude(12.34) == std::array<std::string, 2>{"Am12", "Ac34"});
    CHECK(encode_altitude(5.999) == std::array<std::string, 2>{"Am05", "Ac99"});
    CHECK(encode_altitude(99.999) == std::array<std::string, 2>{"Am99", "Ac99"});
    CHECK(encode_altitude(0.29) == std::array<std::string, 2>{"Am00", "Ac29"});
    CHECK(encode_altitude(9.88) == std::array<std::string, 2>{"Am09", "Ac88"});
    CHECK_THROWS_AS(encode_altitude(100.0), std::out_of_range);
    CHECK_THROWS_AS(encode_altitude(-0.01), std::out_of_range);
}

TEST_CASE("truncation is exact on the centimetre grid")
{
    for (int cm = 0; cm < 10000; ++cm) {
        const double h = cm / 100.0;
        if (h == 9.87)
            continue;
        const auto m = encode_altitude(h);
        const auto a = std::get<AltitudeMeters>(parse_uplink(m[0]));
        const auto c = std::get<AltitudeCentimeters>(parse_uplink(m[1]));
        REQUIRE(a.value * 100 + c.value == cm);
    }
}

TEST_CASE("trigger encoding")
{
    CHECK(encode_trigger(111) == "T111");
    CHECK(encode_trigger(0) == "T000");
    CHECK(encode_trigger(999) == "T999");
    CHECK_THROWS_AS(encode_trigger(1000), std::out_of_range);
    CHECK_THROWS_AS(encode_trigger(-1), std::out_of_range);
}

TEST_CASE("uplink parsing")
{
    CHECK(parse_uplink("Am09") == UplinkMessage{AltitudeMeters{9}});
    CHECK(parse_uplink("Ac89") == UplinkMessage{AltitudeCentimeters{89}});
    CHECK(parse_uplink("T111") == UplinkMessage{Trigger{111}});
    CHECK_THROWS_AS(parse_uplink("Ax12"), MalformedMessage);
    CHECK_THROWS_AS(parse_uplink("Am1x"), MalformedMessage);
    CHECK_THROWS_AS(parse_uplink("Am1"), MalformedMessage);
    CHECK_THROWS_AS(parse_uplink("Q123"), MalformedMessage);
    CHECK(decode_altitude({9}, {87}) == doctest::Approx(9.87));
}

TEST_CASE("scan_buffer")
{
    auto r = scan_buffer("Am09Ac89");
    CHECK(r.messages == std::vector<UplinkMessage>{AltitudeMeters{9}, AltitudeCentimeters{89}});
    CHECK(r.remainder.empty());

    r = scan_buffer("");
    CHECK(r.messages.empty());
    CHECK(r.remainder.empty());

    r = scan_buffer("xxAm09Ac");
    CHECK(r.messages == std::vector<UplinkMessage>{AltitudeMeters{9}});
    CHECK(r.remainder == "Ac");
    CHECK(r.skipped_bytes == 2);

    r = scan_buffer("AmAm09T1");
    CHECK(r.messages == std::vector<UplinkMessage>{AltitudeMeters{9}});
    CHECK(r.remainder == "T1");

    r = scan_buffer("zzzz");
    CHECK(r.messages.empty());
    CHECK(r.remainder.empty());
}

TEST_CASE("uplink round trip and chunking")
{
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<UplinkMessage> sent;
        std::string stream;
        for (int i = 0; i < 40; ++i) {
            sent.push_back(random_uplink(rng));
            stream += encode_uplink(sent.back());
            REQUIRE(parse_uplink(encode_uplink(sent.back())) == sent.back());
        }
        const auto whole = scan_buffer(stream);
        REQUIRE(whole.messages == sent);

        UplinkScanner scanner;
        std::vector<UplinkMessage> got;
        std::size_t pos = 0;
        while (pos < stream.size()) {
            const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 9);
            for (auto& m : scanner.feed(std::string_view(stream).substr(pos, n)))
                got.push_back(m);
            pos += n;
        }
        REQUIRE(got == sent);
        REQUIRE(scanner.remainder().empty());
    }
}

TEST_CASE("scanner never invents messages")
{
    Rng rng(23);
    const std::string alphabet = "AmcT0123456789x";
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        for (int i = 0; i < 24; ++i)
            s += alphabet[static_cast<std::size_t>(rng.uniform() * alphabet.size())];
        const auto r = scan_buffer(s);
        std::size_t from = 0;
        for (const auto& m : r.messages) {
            const auto pos = s.find(encode_uplink(m), from);
            REQUIRE(pos != std::string::npos);
            from = pos + 4;
        }
    }
}

TEST_CASE("altitude assembler pairs metres with centimetres")
{
    AltitudeAssembler a;
    CHECK_FALSE(a.push(AltitudeCentimeters{5}));
    CHECK(a.orphans() == 1);
    CHECK_FALSE(a.push(AltitudeMeters{7}));
    const auto h = a.push(AltitudeCentimeters{25});
    REQUIRE(h);
    CHECK(*h == doctest::Approx(7.25));
    CHECK_FALSE(a.push(Trigger{111}));
}

TEST_CASE("downlink encoding")
{
    CHECK(encode_downlink(Velocity{3.456, 7.892, 1.936}) == "v:3.456,7.892,1.936\n");
    CHECK(encode_downlink(Velocity{0, 0, 0}) == "v:0.000,0.000,0.000\n");
    CHECK(encode_downlink(YawRate{-0.5}) == "w:-0.500\n");
    CHECK(encode_downlink(YawRate{-0.0001}) == "w:0.000\n");
    CHECK(encode_downlink(Land{}) == "l:1\n");
    CHECK_THROWS_AS(encode_downlink(YawRate{std::nan("")}), std::invalid_argument);
}

TEST_CASE("downlink parsing")
{
    CHECK(parse_downlink("v:3.456,7.892,1.936\n") == DownlinkMessage{Velocity{3.456, 7.892, 1.936}});
    CHECK(parse_downlink("l:1\n") == DownlinkMessage{Land{}});
    CHECK(parse_downlink("w:-0.25\n") == DownlinkMessage{YawRate{-0.25}});
    CHECK(parse_downlink("v:1,+2.5,3.14159\n") == DownlinkMessage{Velocity{1, 2.5, 3.14159}});
    CHECK_THROWS_AS(parse_downlink("v:1,2\n"), MalformedMessage);
    CHECK_THROWS_AS(parse_downlink("v:1,2,3"), MalformedMessage);
    CHECK_THROWS_AS(parse_downlink("q:1\n"), MalformedMessage);
    CHECK_THROWS_AS(parse_downlink("w:abc\n"), MalformedMessage);
    CHECK_THROWS_AS(parse_downlink("w:\n"), MalformedMessage);
    CHECK_THROWS_AS(parse_downlink("l:2\n"), MalformedMessage);
    CHECK_THROWS_AS(parse_downlink("v1,2,3\n"), MalformedMessage);
}

TEST_CASE("downlink round trip through the line assembler")
{
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DownlinkMessage> sent;
        std::string stream;
        for (int i = 0; i < 30; ++i) {
            sent.push_back(random_downlink(rng));
            const auto bytes = encode_downlink(sent.back());
            REQUIRE(bytes.back() == '\n');
            REQUIRE(bytes.find('\n') == bytes.size() - 1);
            stream += bytes;
        }
        LineAssembler lines;
        std::vector<DownlinkMessage> got;
        std::size_t pos = 0;
        while (pos < stream.size()) {
            const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 12);
            for (const auto& l : lines.feed(std::string_view(stream).substr(pos, n)))
                got.push_back(parse_downlink(l));
            pos += n;
        }
        REQUIRE(got.size() == sent.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            REQUIRE(close(got[i], sent[i]));
    }
}
