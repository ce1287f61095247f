#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "oracles/image_oracle.hpp"
#include "vizex/features.hpp"

using namespace vizex;
using doctest::Approx;

TEST_SUITE("features") {
    TEST_CASE("luminosity of flat and split frames") {
        const auto black = testing::solid_frame(8, 8, 0, 0, 0);
        const auto white = testing::solid_frame(8, 8, 255, 255, 255);
        CHECK(luminosity(black, Region::whole_frame(8, 8)) == 0.0);
        CHECK(luminosity(white, Region::whole_frame(8, 8)) == Approx(255.0).epsilon(1e-12));

        Frame half = black;
        for (int y = 0; y < 8; ++y) {
            for (int x = 4; x < 8; ++x) {
                for (int c = 0; c < 3; ++c) half.rgb[3 * (y * 8 + x) + c] = 255;
            }
        }
        CHECK(luminosity(half, Region::whole_frame(8, 8)) == Approx(127.5).epsilon(1e-12));
    }

    TEST_CASE("average colour") {
        const auto f = testing::solid_frame(5, 3, 10, 20, 30);
        const auto c = average_color(f, Region::whole_frame(5, 3));
        CHECK(c.r == 10.0);
        CHECK(c.g == 20.0);
        CHECK(c.b == 30.0);

        Frame two{0, 2, 1, {0, 0, 0, 255, 255, 255}};
        const auto m = average_color(two, Region::whole_frame(2, 1));
        CHECK(m.r == 127.5);
        CHECK(m.g == 127.5);
        CHECK(m.b == 127.5);
    }

    TEST_CASE("colour and luma match the per-pixel oracle on random frames") {
        std::mt19937_64 rng(101);
        for (int rep = 0; rep < 25; ++rep) {
            const auto f = testing::random_frame(rng, 64, 64);
            const auto c = average_color(f, Region::whole_frame(64, 64));
            const auto o = oracle::mean_color(f, 0, 0, 64, 64);
            CHECK(std::abs(c.r - o.r) <= 1e-9);
            CHECK(std::abs(c.g - o.g) <= 1e-9);
            CHECK(std::abs(c.b - o.b) <= 1e-9);
            CHECK(std::abs(luminosity(f, Region::whole_frame(64, 64)) - oracle::mean_luma(f, 0, 0, 64, 64)) <= 1e-9);
            const auto cell = Region::grid_cell(64, 64, 4, 4, 2, 1);
            CHECK(std::abs(luminosity(f, cell) - oracle::mean_luma(f, 16, 32, 16, 16)) <= 1e-9);
        }
    }

    TEST_CASE("empty or out-of-frame regions are rejected") {
        const auto f = testing::solid_frame(4, 4, 1, 1, 1);
        CHECK_THROWS_AS(luminosity(view_of(f), Rect{0, 0, 0, 4}), Error);
        CHECK_THROWS_AS(average_color(view_of(f), Rect{2, 2, 4, 4}), Error);
        try {
            luminosity(view_of(f), Rect{0, 0, 0, 4});
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyRegion);
        }
    }

    TEST_CASE("edge fraction: flat frame, stripes, small regions") {
        CHECK(edge_fraction(testing::solid_frame(32, 32, 128, 128, 128), Region::whole_frame(32, 32)) == 0.0);

        Frame stripes = testing::solid_frame(64, 32, 0, 0, 0);
        for (int y = 0; y < 32; ++y) {
            for (int x = 0; x < 64; ++x) {
                if ((x / 8) % 2 == 1) {
                    for (int c = 0; c < 3; ++c) stripes.rgb[3 * (y * 64 + x) + c] = 255;
                }
            }
        }
        const double ef = edge_fraction(stripes, Region::whole_frame(64, 32));
        CHECK(ef > 0.0);
        CHECK(ef <= 1.0);

        try {
            edge_fraction(stripes, Region{Rect{0, 0, 4, 10}, RegionKind::box_region, 0, 0});
            FAIL("expected RegionTooSmall");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::RegionTooSmall);
        }
    }

    TEST_CASE("Canny mask is bit-identical to the straight-line oracle") {
        std::mt19937_64 rng(202);
        const CannyParams p;
        for (int rep = 0; rep < 20; ++rep) {
            const auto noise = testing::random_frame(rng, 64, 64);
            CHECK(canny_edge_mask(noise, p) == oracle::canny(noise, p.sigma, p.low, p.high));
            const auto blocks = testing::blocky_frame(rng, 64, 64);
            CHECK(canny_edge_mask(blocks, p) == oracle::canny(blocks, p.sigma, p.low, p.high));
        }
        const auto f = testing::blocky_frame(rng, 48, 40);
        for (CannyParams q : {CannyParams{1.0, 20, 80}, CannyParams{2.0, 0, 255}, CannyParams{1.4, 33.3, 97.5}}) {
            CHECK(canny_edge_mask(f, q) == oracle::canny(f, q.sigma, q.low, q.high));
        }
    }

    TEST_CASE("box region features") {
        std::mt19937_64 rng(3);
        const auto f = testing::blocky_frame(rng, 32, 32);
        const auto mask = canny_edge_mask(f);
        const Box whole{0, 0, 32, 32, "person", 1.0};
        const auto a = box_region_features(f, std::span<const Box>(&whole, 1), mask);
        const auto b = whole_frame_features(f, mask);
        CHECK(a.luminosity == b.luminosity);
        CHECK(a.edge_fraction == b.edge_fraction);
        CHECK(a.color.r == b.color.r);

        Frame two = testing::solid_frame(20, 10, 10, 10, 10);
        for (int y = 0; y < 10; ++y) {
            for (int x = 10; x < 20; ++x) {
                for (int c = 0; c < 3; ++c) two.rgb[3 * (y * 20 + x) + c] = 30;
            }
        }
        const std::vector<Box> boxes{{0, 0, 10, 10, "person", 1.0}, {10, 0, 10, 10, "person", 1.0}};
        CHECK(box_region_features(two, boxes).luminosity == Approx(20.0).epsilon(1e-12));

        const std::vector<Box> none;
        const auto fallback = box_region_features(f, none, mask);
        CHECK(fallback.luminosity == b.luminosity);
        CHECK(fallback.edge_fraction == b.edge_fraction);
    }

    TEST_CASE("property: repeating a box any number of times leaves the box mean bitwise unchanged") {
        // the box count must not leak into the averaged features through rounding
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 50; ++trial) {
            const auto f = testing::random_frame(rng, 32, 32);
            const auto mask = canny_edge_mask(f);
            std::uniform_int_distribution<int> pos(0, 24);
            const Box one{pos(rng), pos(rng), 7, 7, "person", 1.0};
            const auto single = box_region_features(f, std::span<const Box>(&one, 1), mask);
            for (int n = 2; n <= 12; ++n) {
                const std::vector<Box> many(static_cast<std::size_t>(n), one);
                const auto avg = box_region_features(f, many, mask);
                REQUIRE(avg.luminosity == single.luminosity);
                REQUIRE(avg.edge_fraction == single.edge_fraction);
                REQUIRE(avg.color.r == single.color.r);
                REQUIRE(avg.color.g == single.color.g);
                REQUIRE(avg.color.b == single.color.b);
            }
        }
    }

    TEST_CASE("detection count") {
        PredictionLog log;
        log.frames.resize(3);
        for (int i = 0; i < 3; ++i) log.frames[1].push_back({i, i, 2, 2, "person", 1.0});
        log.frames[1].push_back({0, 0, 2, 2, "car", 1.0});
        CHECK(detection_count(log, 0, "person") == 0);
        CHECK(detection_count(log, 1, "person") == 3);
        for (int i = 0; i < 3; ++i) CHECK(detection_count(log, i, "bicycle") == 0);
        CHECK_THROWS_AS(detection_count(log, 3, "person"), Error);
    }

    TEST_CASE("property: pixel permutation leaves colour and luma unchanged") {
        std::mt19937_64 rng(404);
        for (int rep = 0; rep < 20; ++rep) {
            const auto f = testing::random_frame(rng, 16, 12);
            std::vector<int> order(16 * 12);
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            Frame g = f;
            for (std::size_t i = 0; i < order.size(); ++i) {
                for (int c = 0; c < 3; ++c) g.rgb[3 * i + c] = f.rgb[3 * static_cast<std::size_t>(order[i]) + c];
            }
            const auto r = Region::whole_frame(16, 12);
            CHECK(luminosity(f, r) == Approx(luminosity(g, r)).epsilon(1e-12));
            CHECK(average_color(f, r).g == average_color(g, r).g);
        }
    }

    TEST_CASE("property: grid-cell luma weighted by area equals whole-frame luma") {
        std::mt19937_64 rng(505);
        for (int rep = 0; rep < 20; ++rep) {
            const auto f = testing::random_frame(rng, 64, 48);
            double acc = 0.0;
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    const auto cell = Region::grid_cell(64, 48, 4, 4, r, c);
                    acc += luminosity(f, cell) * static_cast<double>(cell.rect.area());
                }
            }
            CHECK(std::abs(acc / (64.0 * 48.0) - luminosity(f, Region::whole_frame(64, 48))) <= 1e-9);
        }
    }

    TEST_CASE("property: scaling all pixels by s scales luma by s (real-valued raster)") {
        std::mt19937_64 rng(606);
        std::uniform_real_distribution<double> scale(0.01, 1.0);
        for (int rep = 0; rep < 50; ++rep) {
            const auto f = testing::random_frame(rng, 16, 16);
            const double s = scale(rng);
            std::vector<double> base(f.rgb.begin(), f.rgb.end()), scaled(base);
            for (auto& v : scaled) v *= s;
            const Rect all{0, 0, 16, 16};
            const double l0 = luminosity(RgbView<double>{base, 16, 16}, all);
            const double l1 = luminosity(RgbView<double>{scaled, 16, 16}, all);
            CHECK(l1 == Approx(s * l0).epsilon(1e-12));
        }
    }
}
