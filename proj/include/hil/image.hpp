#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace hil {

/// Row-major 8-bit luminance frame.
class GrayFrame {
public:
    GrayFrame() = default;
    GrayFrame(int width, int height, std::uint8_t fill = 0);
    GrayFrame(int width, int height, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

    std::span<const std::uint8_t> row(int y) const
    {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    std::span<std::uint8_t> row(int y)
    {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    std::span<const std::uint8_t> pixels() const noexcept { return data_; }
    std::span<std::uint8_t> pixels() noexcept { return data_; }

    friend bool operator==(const GrayFrame&, const GrayFrame&) = default;

private:
    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Row-major binary frame; nonzero means foreground.
class BinaryFrame {
public:
    BinaryFrame() = default;
    BinaryFrame(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    bool at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    std::span<const std::uint8_t> row(int y) const
    {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    std::span<std::uint8_t> row(int y)
    {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    friend bool operator==(const BinaryFrame&, const BinaryFrame&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

/// Interleaved 8-bit RGB frame.
struct RgbFrame {
    int width = 0;
    int height = 0;
    std::vector<Rgb> data;
};

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);
GrayFrame read_pgm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const GrayFrame& frame);
GrayFrame decode_pgm(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const GrayFrame& frame);

/// Picks PGM or PNG from the file extension.
void write_image(const std::filesystem::path& path, const GrayFrame& frame);

}  // namespace hil
