#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "vizex/error.hpp"
#include "vizex/ingest.hpp"
#include "vizex/series.hpp"

namespace testing {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("vizex_test_" + std::to_string(std::random_device{}()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// Code of the vizex::Error thrown by fn; fails the test when nothing is thrown.
template <class Fn>
vizex::ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const vizex::Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return vizex::ErrorCode::InvalidArgument;
}

inline vizex::Frame random_frame(std::mt19937_64& rng, int w, int h) {
    vizex::Frame f{0, w, h, {}};
    std::uniform_int_distribution<int> byte(0, 255);
    f.rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : f.rgb) v = static_cast<std::uint8_t>(byte(rng));
    return f;
}

// Random blocks of flat colour; gives Canny real structure instead of pure noise.
inline vizex::Frame blocky_frame(std::mt19937_64& rng, int w, int h) {
    vizex::Frame f{0, w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<int> coord(0, std::max(w, h) - 1);
    const auto bg = static_cast<std::uint8_t>(byte(rng));
    std::fill(f.rgb.begin(), f.rgb.end(), bg);
    for (int k = 0; k < 6; ++k) {
        const int x0 = coord(rng) % w, y0 = coord(rng) % h;
        const int x1 = std::min(w, x0 + 1 + coord(rng) % (w / 2 + 1)), y1 = std::min(h, y0 + 1 + coord(rng) % (h / 2 + 1));
        const std::uint8_t c[3] = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                                   static_cast<std::uint8_t>(byte(rng))};
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                for (int ch = 0; ch < 3; ++ch) f.rgb[3 * (static_cast<std::size_t>(y) * w + x) + ch] = c[ch];
            }
        }
    }
    return f;
}

inline vizex::Frame solid_frame(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    vizex::Frame f{0, w, h, {}};
    for (int i = 0; i < w * h; ++i) f.rgb.insert(f.rgb.end(), {r, g, b});
    return f;
}

inline vizex::Series make_series(const std::vector<double>& values, int first_frame = 0) {
    vizex::Series s;
    for (std::size_t i = 0; i < values.size(); ++i) s.push_back({first_frame + static_cast<int>(i), values[i]});
    return s;
}

inline std::vector<double> gaussian_noise(std::mt19937_64& rng, std::size_t n, double sigma = 1.0) {
    std::normal_distribution<double> d(0.0, sigma);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Random log over `frames` frames with up to max_boxes boxes per frame.
inline vizex::PredictionLog random_log(std::mt19937_64& rng, int frames, int max_boxes, int w, int h,
                                       vizex::Provenance prov = vizex::Provenance::prediction) {
    vizex::PredictionLog log;
    log.provenance = prov;
    log.frames.resize(static_cast<std::size_t>(frames));
    std::uniform_int_distribution<int> count(0, max_boxes), bx(0, w - 4), by(0, h - 4), size(2, 8), lab(0, 3);
    for (auto& boxes : log.frames) {
        for (int k = count(rng); k > 0; --k) {
            vizex::Box b{bx(rng), by(rng), size(rng), size(rng), lab(rng) == 0 ? "car" : "person", 0.8};
            vizex::clip_box(b, w, h);
            boxes.push_back(b);
        }
    }
    return log;
}

}  // namespace testing
