#include "hil/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace hil {

namespace {

void check_dims(int width, int height)
{
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("frame dimensions must be positive");
}

}  // namespace

GrayFrame::GrayFrame(int width, int height, std::uint8_t fill)
    : width_(width), height_(height)
{
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayFrame::GrayFrame(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data))
{
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("frame data length does not match width x height");
}

BinaryFrame::BinaryFrame(int width, int height, bool fill)
    : width_(width), height_(height)
{
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::vector<std::uint8_t> encode_pgm(const GrayFrame& frame)
{
    const std::string header =
        "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
    return out;
}

GrayFrame decode_pgm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw ImageIoError("malformed PGM header");
        long value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1'000'000)
                throw ImageIoError("PGM dimension out of range");
            ++pos;
        }
        return static_cast<int>(value);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw ImageIoError("not a binary PGM (P5)");
    pos = 2;
    const int width = read_int();
    const int height = read_int();
    const int maxval = read_int();
    if (maxval != 255)
        throw ImageIoError("only 8-bit PGM is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw ImageIoError("malformed PGM header");
    ++pos;

    const auto count = static_cast<std::size_t>(width) * height;
    if (width <= 0 || height <= 0 || bytes.size() - pos < count)
        throw ImageIoError("truncated PGM payload");
    std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + count));
    return GrayFrame(width, height, std::move(data));
}

void write_pgm(const std::filesystem::path& path, const GrayFrame& frame)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ImageIoError("cannot open " + path.string() + " for writing");
    const auto bytes = encode_pgm(frame);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ImageIoError("failed writing " + path.string());
}

GrayFrame read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_pgm(bytes);
}

void write_png(const std::filesystem::path& path, const GrayFrame& frame)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(frame.width());
    image.height = static_cast<png_uint_32>(frame.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, frame.pixels().data(), 0, nullptr))
        throw ImageIoError("failed writing " + path.string() + ": " + image.message);
}

void write_image(const std::filesystem::path& path, const GrayFrame& frame)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        write_png(path, frame);
    else if (ext == ".pgm")
        write_pgm(path, frame);
    else
        throw ImageIoError("unsupported image extension '" + ext + "': " + path.string());
}

}  // namespace hil
