#include "hil/vision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hil::vision {

void VisionParams::validate() const
{
    if (blur_radius < 1)
        throw std::invalid_argument("vision.blur_radius must be >= 1");
    if (!(blur_sigma > 0.0))
        throw std::invalid_argument("vision.blur_sigma must be > 0");
    if (tile_size < 1)
        throw std::invalid_argument("vision.tile_size must be >= 1");
    if (noise_floor_px < 0)
        throw std::invalid_argument("vision.noise_floor_px must be >= 0");
    if (!(tolerance_frac > 0.0))
        throw std::invalid_argument("vision.tolerance_frac must be > 0");
    if (!(ring_fill_min > 0.0 && ring_fill_min < ring_fill_max && ring_fill_max <= 1.0))
        throw std::invalid_argument("vision ring fill bounds must satisfy 0 < min < max <= 1");
    if (!(solid_fill_min > 0.0))
        throw std::invalid_argument("vision.solid_fill_min must be > 0");
}

// ---------------------------------------------------------------------------
// Grayscale and blur

GrayFrame to_grayscale(const RgbFrame& rgb)
{
    if (rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height)
        throw std::invalid_argument("rgb frame data length does not match width x height");
    GrayFrame out(rgb.width, rgb.height);
    auto dst = out.pixels();
    for (std::size_t i = 0; i < rgb.data.size(); ++i) {
        const auto& p = rgb.data[i];
        const double y = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
    }
    return out;
}

std::vector<double> gaussian_kernel(int radius, double sigma)
{
    if (radius < 1)
        throw std::invalid_argument("blur radius must be >= 1");
    if (!(sigma > 0.0))
        throw std::invalid_argument("blur sigma must be > 0");
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (auto& t : taps)
        t /= sum;
    return taps;
}

GrayFrame gaussian_blur(const GrayFrame& frame, int radius, double sigma)
{
    const auto taps64 = gaussian_kernel(radius, sigma);
    const int w = frame.width();
    const int h = frame.height();
    if (radius >= std::min(w, h))
        throw std::invalid_argument("blur radius must be smaller than the frame");

    const std::vector<float> taps(taps64.begin(), taps64.end());
    const int ntaps = static_cast<int>(taps.size());

    // Horizontal pass into float rows.
    std::vector<float> tmp(static_cast<std::size_t>(w) * h);
    std::vector<float> padded(static_cast<std::size_t>(w) + 2 * radius);
    for (int y = 0; y < h; ++y) {
        const auto src = frame.row(y);
        for (int i = 0; i < radius; ++i) {
            padded[i] = src.front();
            padded[w + radius + i] = src.back();
        }
        for (int x = 0; x < w; ++x)
            padded[x + radius] = src[x];
        float* out = tmp.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            out[x] = 0.0f;
        for (int k = 0; k < ntaps; ++k) {
            const float wk = taps[k];
            const float* in = padded.data() + k;
            for (int x = 0; x < w; ++x)
                out[x] += wk * in[x];
        }
    }

    // Vertical pass with clamped row indices.
    GrayFrame out(w, h);
    std::vector<float> acc(w);
    for (int y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (int k = 0; k < ntaps; ++k) {
            const int sy = std::clamp(y + k - radius, 0, h - 1);
            const float wk = taps[k];
            const float* in = tmp.data() + static_cast<std::size_t>(sy) * w;
            for (int x = 0; x < w; ++x)
                acc[x] += wk * in[x];
        }
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            const float v = std::min(acc[x] + 0.5f, 255.0f);
            dst[x] = static_cast<std::uint8_t>(v);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tiles and thresholding

double TileGrid::center_x(int col) const noexcept
{
    const int x0 = col * tile_size;
    const int x1 = std::min(x0 + tile_size, width) - 1;
    return 0.5 * (x0 + x1);
}

double TileGrid::center_y(int row) const noexcept
{
    const int y0 = row * tile_size;
    const int y1 = std::min(y0 + tile_size, height) - 1;
    return 0.5 * (y0 + y1);
}

TileGrid tile_means(const GrayFrame& frame, int tile_size)
{
    if (tile_size < 1)
        throw std::invalid_argument("tile size must be >= 1");
    if (tile_size > std::min(frame.width(), frame.height()))
        throw std::invalid_argument("tile size exceeds frame dimensions");

    TileGrid grid;
    grid.tile_size = tile_size;
    grid.width = frame.width();
    grid.height = frame.height();
    grid.cols = (frame.width() + tile_size - 1) / tile_size;
    grid.rows = (frame.height() + tile_size - 1) / tile_size;

    std::vector<std::uint64_t> sums(static_cast<std::size_t>(grid.cols) * grid.rows, 0);
    for (int y = 0; y < frame.height(); ++y) {
        const auto src = frame.row(y);
        std::uint64_t* row_sums = sums.data() + static_cast<std::size_t>(y / tile_size) * grid.cols;
        for (int c = 0; c < grid.cols; ++c) {
            const int x0 = c * tile_size;
            const int x1 = std::min(x0 + tile_size, frame.width());
            std::uint32_t s = 0;
            for (int x = x0; x < x1; ++x)
                s += src[x];
            row_sums[c] += s;
        }
    }

    grid.means.resize(sums.size());
    for (int r = 0; r < grid.rows; ++r) {
        const int th = std::min(tile_size, frame.height() - r * tile_size);
        for (int c = 0; c < grid.cols; ++c) {
            const int tw = std::min(tile_size, frame.width() - c * tile_size);
            const auto i = static_cast<std::size_t>(r) * grid.cols + c;
            grid.means[i] = static_cast<double>(sums[i]) / (static_cast<double>(tw) * th);
        }
    }
    return grid;
}

namespace {

struct Lerp {
    int lo = 0;
    int hi = 0;
    double w = 0.0;  // weight of `hi`
};

// Bracketing tile centres for a coordinate; clamps outside the outermost centres.
Lerp bracket(double p, int count, auto center)
{
    if (count == 1 || p <= center(0))
        return {0, 0, 0.0};
    if (p >= center(count - 1))
        return {count - 1, count - 1, 0.0};
    int lo = 0;
    while (center(lo + 1) <= p)
        ++lo;
    const double c0 = center(lo);
    const double c1 = center(lo + 1);
    return {lo, lo + 1, (p - c0) / (c1 - c0)};
}

class ThresholdSurface {
public:
    ThresholdSurface(const TileGrid& grid, double offset)
        : grid_(grid), offset_(offset), column_values_(grid.cols)
    {
        xs_.reserve(grid.width);
        for (int x = 0; x < grid.width; ++x)
            xs_.push_back(bracket(x, grid.cols, [&](int c) { return grid.center_x(c); }));
    }

    // Fills `out` with the threshold of every pixel in row y.
    void row(int y, std::span<double> out)
    {
        const auto ly = bracket(y, grid_.rows, [&](int r) { return grid_.center_y(r); });
        for (int c = 0; c < grid_.cols; ++c)
            column_values_[c] = (1.0 - ly.w) * grid_.mean(ly.lo, c) + ly.w * grid_.mean(ly.hi, c);
        for (std::size_t x = 0; x < out.size(); ++x) {
            const auto& lx = xs_[x];
            out[x] = (1.0 - lx.w) * column_values_[lx.lo] + lx.w * column_values_[lx.hi] - offset_;
        }
    }

private:
    const TileGrid& grid_;
    double offset_;
    std::vector<double> column_values_;
    std::vector<Lerp> xs_;
};

}  // namespace

std::vector<double> threshold_map(const TileGrid& grid, double offset)
{
    ThresholdSurface surface(grid, offset);
    std::vector<double> out(static_cast<std::size_t>(grid.width) * grid.height);
    for (int y = 0; y < grid.height; ++y)
        surface.row(y, std::span<double>(out.data() + static_cast<std::size_t>(y) * grid.width, grid.width));
    return out;
}

BinaryFrame adaptive_threshold(const GrayFrame& frame, const TileGrid& grid, double offset, bool dark_foreground)
{
    if (grid.width != frame.width() || grid.height != frame.height())
        throw std::invalid_argument("tile grid was computed for a different frame size");

    // Light foreground compares against mean + offset.
    ThresholdSurface surface(grid, dark_foreground ? offset : -offset);
    BinaryFrame out(frame.width(), frame.height());
    std::vector<double> t(frame.width());
    for (int y = 0; y < frame.height(); ++y) {
        surface.row(y, t);
        const auto src = frame.row(y);
        auto dst = out.row(y);
        if (dark_foreground) {
            for (int x = 0; x < frame.width(); ++x)
                dst[x] = src[x] < t[x] ? 1 : 0;
        } else {
            for (int x = 0; x < frame.width(); ++x)
                dst[x] = src[x] > t[x] ? 1 : 0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Connected components

namespace {

struct Run {
    int y;
    int x0;
    int x1;
};

int find_root(std::vector<int>& parent, int i)
{
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void unite(std::vector<int>& parent, int a, int b)
{
    a = find_root(parent, a);
    b = find_root(parent, b);
    // The smaller index is the earlier run in raster order; keep it as root.
    if (a < b)
        parent[b] = a;
    else if (b < a)
        parent[a] = b;
}

// Sum of k^2 for k in [0, n].
std::int64_t sum_squares(std::int64_t n)
{
    return n < 0 ? 0 : n * (n + 1) * (2 * n + 1) / 6;
}

}  // namespace

std::vector<BlobStats> label_components(const BinaryFrame& frame, std::vector<int>* label_map)
{
    std::vector<Run> runs;
    std::vector<int> parent;
    std::size_t prev_begin = 0, prev_end = 0;

    for (int y = 0; y < frame.height(); ++y) {
        const auto row = frame.row(y);
        const std::size_t cur_begin = runs.size();
        const auto* const first = row.data();
        const auto* const last = first + row.size();
        const auto* p = first;
        while (p != last) {
            p = std::find_if(p, last, [](std::uint8_t v) { return v != 0; });
            if (p == last)
                break;
            const auto* e = std::find(p, last, std::uint8_t{0});
            runs.push_back({y, static_cast<int>(p - first), static_cast<int>(e - first) - 1});
            parent.push_back(static_cast<int>(runs.size()) - 1);
            p = e;
        }
        const std::size_t cur_end = runs.size();

        // Two-pointer merge against the previous row; 8-connectivity widens
        // each run by one pixel on both sides.
        std::size_t j = prev_begin;
        for (std::size_t i = cur_begin; i < cur_end; ++i) {
            const auto& r = runs[i];
            while (j < prev_end && runs[j].x1 + 1 < r.x0)
                ++j;
            for (std::size_t k = j; k < prev_end && runs[k].x0 <= r.x1 + 1; ++k)
                unite(parent, static_cast<int>(i), static_cast<int>(k));
        }
        prev_begin = cur_begin;
        prev_end = cur_end;
    }

    std::vector<int> slot(runs.size(), -1);
    std::vector<BlobStats> blobs;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const int root = find_root(parent, static_cast<int>(i));
        if (slot[root] < 0) {
            slot[root] = static_cast<int>(blobs.size());
            BlobStats b;
            b.label = static_cast<int>(blobs.size()) + 1;
            b.bbox = {runs[i].x0, runs[i].y, runs[i].x1, runs[i].y};
            blobs.push_back(b);
        }
        auto& b = blobs[slot[root]];
        const auto& r = runs[i];
        const std::int64_t n = r.x1 - r.x0 + 1;
        const std::int64_t sx = (static_cast<std::int64_t>(r.x0) + r.x1) * n / 2;
        const std::int64_t y = r.y;
        b.area += n;
        b.sum_x += sx;
        b.sum_y += y * n;
        b.sum_xx += sum_squares(r.x1) - sum_squares(r.x0 - 1);
        b.sum_yy += y * y * n;
        b.sum_xy += y * sx;
        b.bbox.x_min = std::min(b.bbox.x_min, r.x0);
        b.bbox.x_max = std::max(b.bbox.x_max, r.x1);
        b.bbox.y_min = std::min(b.bbox.y_min, r.y);
        b.bbox.y_max = std::max(b.bbox.y_max, r.y);
    }

    if (label_map) {
        label_map->assign(static_cast<std::size_t>(frame.width()) * frame.height(), 0);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto& r = runs[i];
            auto* row = label_map->data() + static_cast<std::size_t>(r.y) * frame.width();
            std::fill(row + r.x0, row + r.x1 + 1, blobs[slot[find_root(parent, static_cast<int>(i))]].label);
        }
    }
    return blobs;
}

PixelPoint BlobStats::centroid() const noexcept
{
    const auto a = static_cast<double>(area);
    return {static_cast<double>(sum_x) / a, static_cast<double>(sum_y) / a};
}

// The central moments subtract in integer arithmetic before dividing, which
// keeps them exact for any frame that fits in memory.
double BlobStats::mu20() const noexcept
{
    return static_cast<double>(sum_xx * area - sum_x * sum_x) / (static_cast<double>(area) * area);
}

double BlobStats::mu02() const noexcept
{
    return static_cast<double>(sum_yy * area - sum_y * sum_y) / (static_cast<double>(area) * area);
}

double BlobStats::mu11() const noexcept
{
    return static_cast<double>(sum_xy * area - sum_x * sum_y) / (static_cast<double>(area) * area);
}

std::pair<double, double> BlobStats::equivalent_sides() const noexcept
{
    const double a = mu20(), c = mu02(), b = mu11();
    const double mid = 0.5 * (a + c);
    const double half = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    const double l1 = mid + half;
    const double l2 = std::max(mid - half, 0.0);
    return {std::sqrt(12.0 * l1 + 1.0), std::sqrt(12.0 * l2 + 1.0)};
}

double BlobStats::principal_angle() const noexcept
{
    // Flip the sign of the mixed moment to measure with image y up.
    return 0.5 * std::atan2(-2.0 * mu11(), mu20() - mu02());
}

// ---------------------------------------------------------------------------
// Figure classification and pose

SizeExpectation expected_sizes(double altitude_m, const sim::CameraModel& camera,
                               const sim::MarkerGeometry& marker, double tolerance_frac)
{
    if (!(altitude_m > 0.0))
        throw std::invalid_argument("altitude must be positive");
    const double scale = camera.f_px / altitude_m;
    return {
        .ring_inner_px = marker.ring_inner_r * scale,
        .ring_outer_px = marker.ring_outer_r * scale,
        .square_side_px = marker.square_side * scale,
        .rect_long_px = marker.rect_long * scale,
        .rect_short_px = marker.rect_short * scale,
        .tolerance_frac = tolerance_frac,
    };
}

namespace {

double rel_err(double measured, double expected)
{
    return std::abs(measured / expected - 1.0);
}

std::optional<double> ring_score(const BlobStats& b, const SizeExpectation& e, const VisionParams& p)
{
    const double bw = b.bbox.width(), bh = b.bbox.height();
    if (std::abs(bw - bh) / std::max(bw, bh) > e.tolerance_frac)
        return std::nullopt;
    const double fill = static_cast<double>(b.area) / (bw * bh);
    if (fill < p.ring_fill_min || fill > p.ring_fill_max)
        return std::nullopt;
    const double err = rel_err(0.5 * (bw + bh), 2.0 * e.ring_outer_px);
    if (err > e.tolerance_frac)
        return std::nullopt;
    return err;
}

std::optional<double> solid_score(const BlobStats& b, double long_px, double short_px, double tol,
                                  const VisionParams& p)
{
    const auto [l, s] = b.equivalent_sides();
    const double fill = static_cast<double>(b.area) / (l * s);
    if (fill < p.solid_fill_min)
        return std::nullopt;
    const double err = std::max(rel_err(l, long_px), rel_err(s, short_px));
    if (err > tol)
        return std::nullopt;
    return err;
}

void keep_best(std::optional<BlobStats>& slot, double& best, const BlobStats& b, std::optional<double> score)
{
    if (score && *score < best) {
        best = *score;
        slot = b;
    }
}

double image_angle(PixelPoint from, PixelPoint to)
{
    return std::atan2(-(to.y - from.y), to.x - from.x);
}

}  // namespace

FigureSet classify_figures(const std::vector<BlobStats>& blobs, const SizeExpectation& expect,
                           const VisionParams& params)
{
    FigureSet figs;
    double best_ring = INFINITY, best_square = INFINITY, best_rect = INFINITY;
    const double tol = expect.tolerance_frac;
    for (const auto& b : blobs) {
        keep_best(figs.ring, best_ring, b, ring_score(b, expect, params));
        keep_best(figs.square, best_square, b,
                  solid_score(b, expect.square_side_px, expect.square_side_px, tol, params));
        keep_best(figs.rectangle, best_rect, b,
                  solid_score(b, expect.rect_long_px, expect.rect_short_px, tol, params));
    }
    return figs;
}

std::optional<MarkerPose> estimate_pose(const FigureSet& figs)
{
    if (!figs.ring || !(figs.square || figs.rectangle))
        return std::nullopt;

    const auto center = figs.ring->centroid();
    double theta = 0.0;
    if (figs.square && figs.rectangle) {
        theta = image_angle(figs.square->centroid(), figs.rectangle->centroid());
    } else if (figs.rectangle) {
        // The layout axis is the rectangle's minor axis; pick the direction
        // pointing away from the ring.
        const double outward = image_angle(center, figs.rectangle->centroid());
        const double minor = figs.rectangle->principal_angle() + std::numbers::pi / 2;
        const double a = sim::normalize_angle(minor);
        const double b = sim::normalize_angle(minor + std::numbers::pi);
        theta = std::abs(sim::normalize_angle(a - outward)) <= std::abs(sim::normalize_angle(b - outward)) ? a : b;
    } else {
        theta = image_angle(figs.square->centroid(), center);
    }
    return MarkerPose{center.x, center.y, sim::normalize_angle(theta)};
}

Detection detect_detailed(const GrayFrame& frame, double altitude_m, const sim::CameraModel& camera,
                          const sim::MarkerGeometry& marker, const VisionParams& params)
{
    if (!(altitude_m > 0.0))
        throw std::invalid_argument("altitude must be positive");

    const auto blurred = gaussian_blur(frame, params.blur_radius, params.blur_sigma);
    const auto grid = tile_means(blurred, params.tile_size);
    const auto binary = adaptive_threshold(blurred, grid, params.threshold_offset, params.dark_foreground);

    Detection det;
    det.blobs = label_components(binary);
    std::erase_if(det.blobs, [&](const BlobStats& b) { return b.area < params.noise_floor_px; });
    det.figures = classify_figures(det.blobs, expected_sizes(altitude_m, camera, marker, params.tolerance_frac),
                                   params);
    det.pose = estimate_pose(det.figures);
    return det;
}

std::optional<MarkerPose> detect(const GrayFrame& frame, double altitude_m, const sim::CameraModel& camera,
                                 const sim::MarkerGeometry& marker, const VisionParams& params)
{
    return detect_detailed(frame, altitude_m, camera, marker, params).pose;
}

// ---------------------------------------------------------------------------
// Overlay

namespace {

void put(GrayFrame& f, int x, int y, std::uint8_t v)
{
    if (x >= 0 && y >= 0 && x < f.width() && y < f.height())
        f.at(x, y) = v;
}

void draw_box(GrayFrame& f, const BoundingBox& b, std::uint8_t v)
{
    for (int x = b.x_min - 2; x <= b.x_max + 2; ++x) {
        put(f, x, b.y_min - 2, v);
        put(f, x, b.y_max + 2, v);
    }
    for (int y = b.y_min - 2; y <= b.y_max + 2; ++y) {
        put(f, b.x_min - 2, y, v);
        put(f, b.x_max + 2, y, v);
    }
}

}  // namespace

void draw_overlay(GrayFrame& frame, const Detection& detection)
{
    const auto& figs = detection.figures;
    for (const auto* fig : {&figs.ring, &figs.square, &figs.rectangle}) {
        if (*fig)
            draw_box(frame, (*fig)->bbox, 255);
    }
    if (!detection.pose)
        return;
    const auto& p = *detection.pose;
    const int cx = static_cast<int>(std::lround(p.x_px));
    const int cy = static_cast<int>(std::lround(p.y_px));
    for (int d = -12; d <= 12; ++d) {
        put(frame, cx + d, cy, 0);
        put(frame, cx, cy + d, 0);
    }
    // Heading tick along the layout axis.
    for (int t = 0; t <= 60; ++t) {
        put(frame, cx + static_cast<int>(std::lround(t * std::cos(p.theta))),
            cy - static_cast<int>(std::lround(t * std::sin(p.theta))), 0);
    }
}

}  // namespace hil::vision
