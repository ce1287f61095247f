// Straight-line reimplementations of the image features, written from the
// definitions rather than from the production code paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vizex/ingest.hpp"

namespace oracle {

struct Mean3 {
    double r, g, b;
};

inline Mean3 mean_color(const vizex::Frame& f, int x0, int y0, int w, int h) {
    long double r = 0, g = 0, b = 0;
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
            const auto* p = &f.rgb[3 * (static_cast<std::size_t>(y) * f.width + x)];
            r += p[0];
            g += p[1];
            b += p[2];
        }
    }
    const long double n = static_cast<long double>(w) * h;
    return {static_cast<double>(r / n), static_cast<double>(g / n), static_cast<double>(b / n)};
}

inline double mean_luma(const vizex::Frame& f, int x0, int y0, int w, int h) {
    long double acc = 0;
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
            const auto* p = &f.rgb[3 * (static_cast<std::size_t>(y) * f.width + x)];
            acc += 0.299L * p[0] + 0.587L * p[1] + 0.114L * p[2];
        }
    }
    return static_cast<double>(acc / (static_cast<long double>(w) * h));
}

// Canny as a textbook pipeline: 2D 5x5 Gaussian (outer product of the
// integer taps), Sobel, angle-sector NMS via atan2, and hysteresis by
// repeated sweeps until nothing changes.
inline std::vector<std::uint8_t> canny(const vizex::Frame& f, double sigma, double low, double high) {
    const int W = f.width, H = f.height;
    auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    std::vector<long long> gray(static_cast<std::size_t>(W) * H);
    for (int i = 0; i < W * H; ++i) {
        gray[i] = (299LL * f.rgb[3 * i] + 587LL * f.rgb[3 * i + 1] + 114LL * f.rgb[3 * i + 2] + 500) / 1000;
    }
    long long tap[5];
    for (int i = -2; i <= 2; ++i) {
        const long long t = std::llround(16.0 * std::exp(-(i * i) / (2.0 * sigma * sigma)));
        tap[i + 2] = t < 1 ? 1 : t;
    }
    std::vector<long long> blur(gray.size());
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            long long acc = 0;
            for (int j = -2; j <= 2; ++j) {
                for (int i = -2; i <= 2; ++i) {
                    acc += tap[j + 2] * tap[i + 2] * gray[clampi(y + j, H - 1) * W + clampi(x + i, W - 1)];
                }
            }
            blur[y * W + x] = acc;
        }
    }
    const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    std::vector<long long> gx(gray.size()), gy(gray.size()), m2(gray.size());
    long long max2 = 0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            long long sx = 0, sy = 0;
            for (int j = -1; j <= 1; ++j) {
                for (int i = -1; i <= 1; ++i) {
                    const long long v = blur[clampi(y + j, H - 1) * W + clampi(x + i, W - 1)];
                    sx += kx[j + 1][i + 1] * v;
                    sy += ky[j + 1][i + 1] * v;
                }
            }
            gx[y * W + x] = sx;
            gy[y * W + x] = sy;
            m2[y * W + x] = sx * sx + sy * sy;
            if (m2[y * W + x] > max2) max2 = m2[y * W + x];
        }
    }
    std::vector<std::uint8_t> out(gray.size(), 0);
    if (max2 == 0) return out;

    // normalized magnitude sqrt(m2) * 255 / sqrt(max2) >= t, squared and cross-multiplied
    auto passes = [&](long long v2, double t) {
        if (t <= 0) return true;
        __extension__ typedef __int128 wide;
        const wide lhs = static_cast<wide>(v2) * 65025;
        if (t == std::floor(t)) {
            const auto ti = static_cast<wide>(t);
            return lhs >= ti * ti * max2;
        }
        return static_cast<long double>(v2) * 65025.0L >= static_cast<long double>(t) * t * static_cast<long double>(max2);
    };
    const double pi = std::acos(-1.0);
    std::vector<int> cls(gray.size(), 0);
    auto mag = [&](int x, int y) -> long long { return x < 0 || y < 0 || x >= W || y >= H ? 0 : m2[y * W + x]; };
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const int i = y * W + x;
            if (m2[i] == 0) continue;
            double a = std::atan2(static_cast<double>(gy[i]), static_cast<double>(gx[i]));
            if (a < 0) a += pi;
            if (a >= pi) a -= pi;
            int dx, dy;
            if (a < pi / 8 || a >= 7 * pi / 8) {
                dx = 1, dy = 0;
            } else if (a < 3 * pi / 8) {
                dx = 1, dy = 1;
            } else if (a < 5 * pi / 8) {
                dx = 0, dy = 1;
            } else {
                dx = 1, dy = -1;
            }
            const bool peak = m2[i] > mag(x - dx, y - dy) && m2[i] >= mag(x + dx, y + dy);
            if (!peak) continue;
            cls[i] = passes(m2[i], high) ? 2 : (passes(m2[i], low) ? 1 : 0);
        }
    }
    for (std::size_t i = 0; i < cls.size(); ++i) out[i] = cls[i] == 2;
    for (bool changed = true; changed;) {
        changed = false;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const int i = y * W + x;
                if (cls[i] != 1 || out[i]) continue;
                for (int j = -1; j <= 1 && !out[i]; ++j) {
                    for (int k = -1; k <= 1; ++k) {
                        const int nx = x + k, ny = y + j;
                        if (nx >= 0 && ny >= 0 && nx < W && ny < H && out[ny * W + nx]) {
                            out[i] = 1;
                            changed = true;
                            break;
                        }
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace oracle
