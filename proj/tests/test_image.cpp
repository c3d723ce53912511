#include "hil/image.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace hil;

TEST_CASE("frame construction validates dimensions")
{
    CHECK_THROWS_AS(GrayFrame(0, 5), std::invalid_argument);
    CHECK_THROWS_AS(GrayFrame(3, 3, std::vector<std::uint8_t>(8)), std::invalid_argument);
    CHECK_THROWS_AS(BinaryFrame(-1, 2), std::invalid_argument);
    GrayFrame f(4, 3, 9);
    CHECK(f.at(3, 2) == 9);
    CHECK(f.row(1).size() == 4);
}

TEST_CASE("PGM round trip")
{
    GrayFrame f(5, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x)
            f.at(x, y) = static_cast<std::uint8_t>(x * 40 + y);
    const auto bytes = encode_pgm(f);
    const std::string header(bytes.begin(), bytes.begin() + 11);
    CHECK(header == "P5\n5 3\n255\n");
    CHECK(decode_pgm(bytes) == f);

    const auto path = std::filesystem::temp_directory_path() / "hil_test_roundtrip.pgm";
    write_pgm(path, f);
    CHECK(read_pgm(path) == f);
    std::filesystem::remove(path);
}

TEST_CASE("PGM decoding skips comments and rejects bad input")
{
    const std::string text = "P5\n# made by hand\n2 1\n255\n\x01\x02";
    const std::vector<std::uint8_t> ok(text.begin(), text.end());
    const auto f = decode_pgm(ok);
    CHECK(f.width() == 2);
    CHECK(f.at(1, 0) == 2);

    auto bad = [](std::string s) {
        std::vector<std::uint8_t> v(s.begin(), s.end());
        return decode_pgm(v);
    };
    CHECK_THROWS_AS(bad("P6\n1 1\n255\n\x01"), ImageIoError);
    CHECK_THROWS_AS(bad("P5\n2 2\n255\n\x01"), ImageIoError);
    CHECK_THROWS_AS(bad("P5\n1 1\n65535\n\x01\x01"), ImageIoError);
    CHECK_THROWS_AS(read_pgm("/nonexistent/dir/x.pgm"), ImageIoError);
}

TEST_CASE("PNG writing")
{
    const auto path = std::filesystem::temp_directory_path() / "hil_test_frame.png";
    write_image(path, GrayFrame(16, 8, 100));
    std::ifstream in(path, std::ios::binary);
    char sig[8];
    in.read(sig, 8);
    CHECK(std::string(sig + 1, 3) == "PNG");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(write_image("/tmp/x.bmp", GrayFrame(2, 2)), ImageIoError);
}
