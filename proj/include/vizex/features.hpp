#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "vizex/error.hpp"
#include "vizex/ingest.hpp"

namespace vizex {

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
    bool operator==(const Rect&) const = default;
};

enum class RegionKind { whole_frame, grid_cell, box_region };

struct Region {
    Rect rect;
    RegionKind kind = RegionKind::whole_frame;
    int row = 0;
    int col = 0;

    static Region whole_frame(int width, int height);
    // Cell (row, col) of a rows x cols grid; boundaries at floor(i * extent / n).
    static Region grid_cell(int width, int height, int rows, int cols, int row, int col);
    static Region box_region(const Box& box);
};

// Read-only RGB raster of any channel type; the real-valued instantiation
// exists for harnesses that need arithmetic without quantization.
template <class T>
struct RgbView {
    std::span<const T> data;
    int width = 0;
    int height = 0;
};

inline RgbView<std::uint8_t> view_of(const Frame& f) { return {f.rgb, f.width, f.height}; }

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

// Rec. 601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

namespace detail {

template <class T>
void check_region(const RgbView<T>& img, const Rect& r) {
    if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > img.width || r.y + r.h > img.height) {
        throw Error(ErrorCode::EmptyRegion, "region is empty or outside the frame");
    }
}

template <class T>
std::array<double, 3> channel_sums(const RgbView<T>& img, const Rect& r) {
    using Acc = std::conditional_t<std::is_integral_v<T>, std::int64_t, double>;
    Acc s[3] = {0, 0, 0};
    for (int y = r.y; y < r.y + r.h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * img.width;
        for (int x = r.x; x < r.x + r.w; ++x) {
            const std::size_t p = 3 * (row + x);
            s[0] += img.data[p];
            s[1] += img.data[p + 1];
            s[2] += img.data[p + 2];
        }
    }
    return {static_cast<double>(s[0]), static_cast<double>(s[1]), static_cast<double>(s[2])};
}

}  // namespace detail

template <class T>
Rgb average_color(const RgbView<T>& img, const Rect& region) {
    detail::check_region(img, region);
    const auto s = detail::channel_sums(img, region);
    const double n = static_cast<double>(region.area());
    return {s[0] / n, s[1] / n, s[2] / n};
}

template <class T>
double luminosity(const RgbView<T>& img, const Rect& region) {
    detail::check_region(img, region);
    const auto s = detail::channel_sums(img, region);
    return (kLumaR * s[0] + kLumaG * s[1] + kLumaB * s[2]) / static_cast<double>(region.area());
}

inline Rgb average_color(const Frame& f, const Region& region) { return average_color(view_of(f), region.rect); }
inline double luminosity(const Frame& f, const Region& region) { return luminosity(view_of(f), region.rect); }

struct CannyParams {
    double sigma = 1.4;
    double low = 50.0;
    double high = 150.0;
};

// Integer taps of the separable 5-tap Gaussian: round(16 * exp(-i^2 / (2 sigma^2))).
std::array<int, 5> gaussian_taps(double sigma);

// Binary edge mask (1 = edge) of the whole frame, row-major.
//  1. 5x5 Gaussian blur (separable integer taps, replicated borders)
//  2. Sobel gradients on the blurred raster
//  3. non-maximum suppression along the quantized gradient direction
//  4. hysteresis with low/high applied to the magnitude normalized so the
//     frame maximum maps to 255
// Operates on Rec. 601 gray computed in integer fixed point.
std::vector<std::uint8_t> canny_edge_mask(const Frame& frame, const CannyParams& params = {});

// Gray conversion used by the edge detector: (299 R + 587 G + 114 B + 500) / 1000.
std::vector<std::int32_t> gray_levels(const Frame& frame);

double edge_fraction(const Frame& frame, const Region& region, const CannyParams& params = {});
// Counts mask pixels inside a region; the caller owns the mask.
double edge_fraction_from_mask(std::span<const std::uint8_t> mask, int width, const Rect& region);

struct RegionFeatures {
    Rgb color;
    double luminosity = 0.0;
    double edge_fraction = 0.0;
};

// Whole-frame features; the fallback for an empty box list.
RegionFeatures whole_frame_features(const Frame& frame, std::span<const std::uint8_t> mask);

// Unweighted mean of per-box features over boxes (clipped to the frame).
// With no boxes the whole-frame features are returned.
RegionFeatures box_region_features(const Frame& frame, std::span<const Box> boxes, const CannyParams& params = {});
RegionFeatures box_region_features(const Frame& frame, std::span<const Box> boxes, std::span<const std::uint8_t> mask);

int detection_count(const PredictionLog& log, int frame_index, const std::string& label);

}  // namespace vizex
