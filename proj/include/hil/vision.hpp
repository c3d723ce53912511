#pragma once

#include "hil/image.hpp"
#include "hil/scene.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hil::vision {

struct VisionParams {
    int blur_radius = 2;
    double blur_sigma = 1.0;
    int tile_size = 32;
    double threshold_offset = 15.0;
    bool dark_foreground = true;
    std::int64_t noise_floor_px = 25;
    double tolerance_frac = 0.30;
    double ring_fill_min = 0.15;
    double ring_fill_max = 0.60;
    double solid_fill_min = 0.80;

    void validate() const;
};

struct TileGrid {
    int tile_size = 0;
    int cols = 0;
    int rows = 0;
    int width = 0;
    int height = 0;
    std::vector<double> means;  // row-major, rows x cols

    double mean(int row, int col) const { return means[static_cast<std::size_t>(row) * cols + col]; }

    /// Centre of a (possibly partial) tile along one axis, in pixel coordinates.
    double center_x(int col) const noexcept;
    double center_y(int row) const noexcept;
};

struct BoundingBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    int width() const noexcept { return x_max - x_min + 1; }
    int height() const noexcept { return y_max - y_min + 1; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Per-component statistics. The raw integer sums are kept so that
/// centroids and second moments are reproducible bit for bit.
struct BlobStats {
    int label = 0;
    std::int64_t area = 0;
    BoundingBox bbox;
    std::int64_t sum_x = 0, sum_y = 0;
    std::int64_t sum_xx = 0, sum_yy = 0, sum_xy = 0;

    PixelPoint centroid() const noexcept;

    /// Central second moments divided by area (covariance of pixel coordinates).
    double mu20() const noexcept;
    double mu02() const noexcept;
    double mu11() const noexcept;

    /// Side lengths of the solid rectangle with the same second moments,
    /// long side first. Corrected for pixel discretisation.
    std::pair<double, double> equivalent_sides() const noexcept;

    /// Angle of the major principal axis, measured counter-clockwise from
    /// image +x with image y pointing up, in (-pi/2, pi/2].
    double principal_angle() const noexcept;

    friend bool operator==(const BlobStats&, const BlobStats&) = default;
};

struct SizeExpectation {
    double ring_inner_px = 0.0;
    double ring_outer_px = 0.0;
    double square_side_px = 0.0;
    double rect_long_px = 0.0;
    double rect_short_px = 0.0;
    double tolerance_frac = 0.30;
};

struct FigureSet {
    std::optional<BlobStats> ring;
    std::optional<BlobStats> square;
    std::optional<BlobStats> rectangle;
};

/// Marker centre in image coordinates and orientation of the layout axis
/// (square toward rectangle), counter-clockwise from image +x with image y up.
struct MarkerPose {
    double x_px = 0.0;
    double y_px = 0.0;
    double theta = 0.0;
};

struct Detection {
    std::vector<BlobStats> blobs;  // after the noise floor
    FigureSet figures;
    std::optional<MarkerPose> pose;
};

GrayFrame to_grayscale(const RgbFrame& rgb);

/// Separable Gaussian with edge replication.
GrayFrame gaussian_blur(const GrayFrame& frame, int radius, double sigma);

/// Normalised 1-D Gaussian taps, index 0 is the centre tap at offset -radius.
std::vector<double> gaussian_kernel(int radius, double sigma);

TileGrid tile_means(const GrayFrame& frame, int tile_size);

/// Bilinearly interpolated tile means at every pixel, minus `offset`.
std::vector<double> threshold_map(const TileGrid& grid, double offset);

BinaryFrame adaptive_threshold(const GrayFrame& frame, const TileGrid& grid, double offset,
                               bool dark_foreground = true);

/// 8-connected labelling; labels follow raster-scan first-encounter order.
/// `label_map`, when given, receives each pixel's label (0 for background).
std::vector<BlobStats> label_components(const BinaryFrame& frame, std::vector<int>* label_map = nullptr);

SizeExpectation expected_sizes(double altitude_m, const sim::CameraModel& camera,
                               const sim::MarkerGeometry& marker, double tolerance_frac = 0.30);

FigureSet classify_figures(const std::vector<BlobStats>& blobs, const SizeExpectation& expect,
                           const VisionParams& params = {});

std::optional<MarkerPose> estimate_pose(const FigureSet& figs);

Detection detect_detailed(const GrayFrame& frame, double altitude_m, const sim::CameraModel& camera,
                          const sim::MarkerGeometry& marker, const VisionParams& params);

std::optional<MarkerPose> detect(const GrayFrame& frame, double altitude_m, const sim::CameraModel& camera,
                                 const sim::MarkerGeometry& marker, const VisionParams& params);

/// Draws figure bounding boxes and a pose cross for debugging.
void draw_overlay(GrayFrame& frame, const Detection& detection);

}  // namespace hil::vision
