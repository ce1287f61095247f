#include "vizex/features.hpp"

#include <algorithm>
#include <cmath>

namespace vizex {

Region Region::whole_frame(int width, int height) {
    return Region{Rect{0, 0, width, height}, RegionKind::whole_frame, 0, 0};
}

Region Region::grid_cell(int width, int height, int rows, int cols, int row, int col) {
    if (rows < 1 || cols < 1 || row < 0 || row >= rows || col < 0 || col >= cols) {
        throw Error(ErrorCode::InvalidArgument, "grid cell index outside the grid");
    }
    const int x0 = static_cast<int>(static_cast<std::int64_t>(col) * width / cols);
    const int x1 = static_cast<int>(static_cast<std::int64_t>(col + 1) * width / cols);
    const int y0 = static_cast<int>(static_cast<std::int64_t>(row) * height / rows);
    const int y1 = static_cast<int>(static_cast<std::int64_t>(row + 1) * height / rows);
    return Region{Rect{x0, y0, x1 - x0, y1 - y0}, RegionKind::grid_cell, row, col};
}

Region Region::box_region(const Box& box) {
    return Region{Rect{box.x, box.y, box.w, box.h}, RegionKind::box_region, 0, 0};
}

std::array<int, 5> gaussian_taps(double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "Canny sigma must be positive");
    std::array<int, 5> taps{};
    for (int i = -2; i <= 2; ++i) {
        taps[static_cast<std::size_t>(i + 2)] =
            std::max(1, static_cast<int>(std::lround(16.0 * std::exp(-(i * i) / (2.0 * sigma * sigma)))));
    }
    return taps;
}

std::vector<std::int32_t> gray_levels(const Frame& frame) {
    std::vector<std::int32_t> gray(frame.pixel_count());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const std::int32_t r = frame.rgb[3 * i];
        const std::int32_t g = frame.rgb[3 * i + 1];
        const std::int32_t b = frame.rgb[3 * i + 2];
        gray[i] = (299 * r + 587 * g + 114 * b + 500) / 1000;
    }
    return gray;
}

namespace {

__extension__ using i128 = __int128;

// True when value * 255 >= threshold * max_value, compared on squared magnitudes.
bool at_least(std::int64_t mag2, std::int64_t max2, double threshold) {
    const double rounded = std::round(threshold);
    if (rounded == threshold && threshold >= 0.0 && threshold < 1e6) {
        const auto t = static_cast<i128>(rounded);
        return static_cast<i128>(mag2) * (255 * 255) >= t * t * max2;
    }
    if (threshold <= 0.0) return true;
    return static_cast<long double>(mag2) * 65025.0L >=
           static_cast<long double>(threshold) * threshold * static_cast<long double>(max2);
}

}  // namespace

std::vector<std::uint8_t> canny_edge_mask(const Frame& frame, const CannyParams& params) {
    const int w = frame.width;
    const int h = frame.height;
    const std::size_t n = frame.pixel_count();
    const auto taps = gaussian_taps(params.sigma);
    const auto gray = gray_levels(frame);
    auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };

    // Separable integer blur; the product of integer taps equals the 2D kernel exactly.
    std::vector<std::int64_t> horiz(n), blur(n);
    for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            std::int64_t acc = 0;
            for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * static_cast<std::int64_t>(gray[row + clampi(x + k, 0, w - 1)]);
            horiz[row + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int64_t acc = 0;
            for (int k = -2; k <= 2; ++k) acc += taps[k + 2] * horiz[static_cast<std::size_t>(clampi(y + k, 0, h - 1)) * w + x];
            blur[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }

    std::vector<std::int64_t> gx(n), gy(n), mag2(n);
    std::int64_t max2 = 0;
    auto at = [&](int x, int y) { return blur[static_cast<std::size_t>(clampi(y, 0, h - 1)) * w + clampi(x, 0, w - 1)]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::int64_t dx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                                    (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            const std::int64_t dy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                                    (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx[i] = dx;
            gy[i] = dy;
            mag2[i] = dx * dx + dy * dy;
            max2 = std::max(max2, mag2[i]);
        }
    }

    std::vector<std::uint8_t> mask(n, 0);
    if (max2 == 0) return mask;

    // 0 = suppressed, 1 = weak, 2 = strong
    std::vector<std::uint8_t> level(n, 0);
    auto mag_at = [&](int x, int y) -> std::int64_t {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0;
        return mag2[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const std::int64_t m = mag2[i];
            if (m == 0) continue;
            const std::int64_t ax = std::abs(gx[i]);
            const std::int64_t ay = std::abs(gy[i]);
            // Sector boundaries at tan(22.5 deg) = sqrt(2) - 1 and tan(67.5 deg) = sqrt(2) + 1,
            // tested exactly on integers.
            int dx = 0, dy = 0;
            if ((ay + ax) * (ay + ax) < 2 * ax * ax) {
                dx = 1;
            } else if (ay >= ax && (ay - ax) * (ay - ax) >= 2 * ax * ax) {
                dy = 1;
            } else if ((gx[i] > 0) == (gy[i] > 0)) {
                dx = 1;
                dy = 1;
            } else {
                dx = 1;
                dy = -1;
            }
            if (!(m > mag_at(x - dx, y - dy) && m >= mag_at(x + dx, y + dy))) continue;
            if (at_least(m, max2, params.high)) {
                level[i] = 2;
            } else if (at_least(m, max2, params.low)) {
                level[i] = 1;
            }
        }
    }

    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (level[i] == 2) {
            mask[i] = 1;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        for (int oy = -1; oy <= 1; ++oy) {
            for (int ox = -1; ox <= 1; ++ox) {
                const int nx = x + ox, ny = y + oy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (level[j] != 0 && mask[j] == 0) {
                    mask[j] = 1;
                    stack.push_back(j);
                }
            }
        }
    }
    return mask;
}

double edge_fraction_from_mask(std::span<const std::uint8_t> mask, int width, const Rect& r) {
    std::int64_t count = 0;
    for (int y = r.y; y < r.y + r.h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * width;
        for (int x = r.x; x < r.x + r.w; ++x) count += mask[row + x];
    }
    return static_cast<double>(count) / static_cast<double>(r.area());
}

double edge_fraction(const Frame& frame, const Region& region, const CannyParams& params) {
    const auto& r = region.rect;
    detail::check_region(view_of(frame), r);
    if (r.w < 5 || r.h < 5) throw Error(ErrorCode::RegionTooSmall, "edge_fraction needs a region of at least 5x5");
    const auto mask = canny_edge_mask(frame, params);
    return edge_fraction_from_mask(mask, frame.width, r);
}

RegionFeatures whole_frame_features(const Frame& frame, std::span<const std::uint8_t> mask) {
    const Rect all{0, 0, frame.width, frame.height};
    RegionFeatures out;
    out.color = average_color(view_of(frame), all);
    out.luminosity = luminosity(view_of(frame), all);
    out.edge_fraction = edge_fraction_from_mask(mask, frame.width, all);
    return out;
}

RegionFeatures box_region_features(const Frame& frame, std::span<const Box> boxes, std::span<const std::uint8_t> mask) {
    // Extended accumulators keep the sum of equal values exact, so the mean of
    // identical boxes is bitwise the per-box value whatever the box count.
    std::size_t used = 0;
    long double r = 0, g = 0, b = 0, lum = 0, edge = 0;
    for (Box box : boxes) {
        if (!clip_box(box, frame.width, frame.height)) continue;
        const Rect rect{box.x, box.y, box.w, box.h};
        const auto c = average_color(view_of(frame), rect);
        r += c.r;
        g += c.g;
        b += c.b;
        lum += luminosity(view_of(frame), rect);
        edge += edge_fraction_from_mask(mask, frame.width, rect);
        ++used;
    }
    if (used == 0) return whole_frame_features(frame, mask);
    const auto n = static_cast<long double>(used);
    RegionFeatures out;
    out.color.r = static_cast<double>(r / n);
    out.color.g = static_cast<double>(g / n);
    out.color.b = static_cast<double>(b / n);
    out.luminosity = static_cast<double>(lum / n);
    out.edge_fraction = static_cast<double>(edge / n);
    return out;
}

RegionFeatures box_region_features(const Frame& frame, std::span<const Box> boxes, const CannyParams& params) {
    const auto mask = canny_edge_mask(frame, params);
    return box_region_features(frame, boxes, mask);
}

int detection_count(const PredictionLog& log, int frame_index, const std::string& label) {
    if (frame_index < 0 || static_cast<std::size_t>(frame_index) >= log.frames.size()) {
        throw Error(ErrorCode::FrameOutOfRange, "frame " + std::to_string(frame_index) + " outside the log");
    }
    const auto& boxes = log.frames[static_cast<std::size_t>(frame_index)];
    return static_cast<int>(std::count_if(boxes.begin(), boxes.end(), [&](const Box& b) { return b.label == label; }));
}

}  // namespace vizex
