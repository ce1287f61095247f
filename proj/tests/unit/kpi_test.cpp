#include <doctest.h>

#include "helpers.hpp"
#include "oracles/image_oracle.hpp"
#include "vizex/kpi.hpp"

using namespace vizex;

namespace {

struct Fixture {
    Manifest manifest;
    std::vector<Frame> frames;
    PredictionLog pred, gt;
    std::map<std::string, ExternalSeries> externals;

    Fixture(int n, std::uint64_t seed) {
        manifest.width = 32;
        manifest.height = 32;
        manifest.frame_count = n;
        std::mt19937_64 rng(seed);
        for (int i = 0; i < n; ++i) {
            frames.push_back(testing::blocky_frame(rng, 32, 32));
            frames.back().index = i;
        }
        pred = testing::random_log(rng, n, 3, 32, 32);
        gt = testing::random_log(rng, n, 3, 32, 32, Provenance::ground_truth);
    }

    KpiInputs inputs() const { return KpiInputs{&manifest, &frames, &pred, &gt, &externals, {}}; }
};

KpiDefinition def(Lambda l, int w, Aggregator agg = Aggregator::mean) {
    KpiDefinition d;
    d.name = "k";
    d.lambda = l;
    d.w = w;
    d.aggregator = agg;
    return d;
}

}  // namespace

TEST_SUITE("kpi") {
    TEST_CASE("windowed mean example") {
        const std::vector<double> lum{0, 30, 60, 90};
        const auto s = window_aggregate(lum, 3, Aggregator::mean);
        REQUIRE(s.size() == 2);
        CHECK(s[0] == SeriesPoint{2, 30.0});
        CHECK(s[1] == SeriesPoint{3, 60.0});
        CHECK(window_aggregate(lum, 1, Aggregator::mean) == testing::make_series(lum));
        CHECK_THROWS_AS(window_aggregate(lum, 0, Aggregator::mean), Error);
    }

    TEST_CASE("w=1 gives the raw per-frame feature") {
        Fixture fx(12, 1);
        const auto s = compute_kpi_series(def(Lambda::luminosity, 1), fx.inputs());
        REQUIRE(s.points.size() == 12);
        for (int i = 0; i < 12; ++i) {
            CHECK(s.points[i].frame == i);
            CHECK(std::abs(s.points[i].value - oracle::mean_luma(fx.frames[i], 0, 0, 32, 32)) <= 1e-9);
        }
    }

    TEST_CASE("w=5 over 200 frames equals a naive per-window recompute") {
        Fixture fx(200, 2);
        for (auto agg : {Aggregator::mean, Aggregator::min, Aggregator::max}) {
            const auto s = compute_kpi_series(def(Lambda::luminosity, 5, agg), fx.inputs());
            REQUIRE(s.points.size() == 196);
            for (const auto& p : s.points) {
                std::vector<double> win;
                for (int k = p.frame - 4; k <= p.frame; ++k) win.push_back(oracle::mean_luma(fx.frames[k], 0, 0, 32, 32));
                double want = 0.0;
                if (agg == Aggregator::mean) {
                    for (double v : win) want += v;
                    want /= 5.0;
                } else if (agg == Aggregator::min) {
                    want = *std::min_element(win.begin(), win.end());
                } else {
                    want = *std::max_element(win.begin(), win.end());
                }
                CHECK(std::abs(p.value - want) <= 1e-9);
            }
        }
    }

    TEST_CASE("every point lies in the lambda's range and frames increase") {
        Fixture fx(30, 3);
        for (auto l : {Lambda::luminosity, Lambda::avg_r, Lambda::avg_g, Lambda::avg_b, Lambda::edge_fraction,
                       Lambda::detection_count}) {
            for (auto r : {RegionSelector::whole_frame, RegionSelector::grid_cell, RegionSelector::gt_boxes,
                           RegionSelector::detected_boxes}) {
                auto d = def(l, 3);
                d.region = r;
                const auto s = compute_kpi_series(d, fx.inputs());
                const auto [lo, hi] = lambda_range(l);
                for (std::size_t i = 0; i < s.points.size(); ++i) {
                    CHECK(s.points[i].value >= lo);
                    CHECK(s.points[i].value <= hi);
                    if (i > 0) CHECK(s.points[i].frame > s.points[i - 1].frame);
                }
            }
        }
    }

    TEST_CASE("property: re-windowing the w=1 series reproduces the w series") {
        Fixture fx(60, 4);
        const auto raw = compute_kpi_series(def(Lambda::avg_g, 1), fx.inputs());
        std::vector<double> per;
        for (const auto& p : raw.points) per.push_back(p.value);
        for (int w : {2, 7, 13}) {
            const auto direct = compute_kpi_series(def(Lambda::avg_g, w), fx.inputs());
            const auto again = window_aggregate(per, w, Aggregator::mean);
            REQUIRE(direct.points.size() == again.size());
            for (std::size_t i = 0; i < again.size(); ++i) {
                CHECK(direct.points[i].frame == again[i].frame);
                CHECK(std::abs(direct.points[i].value - again[i].value) <= 1e-9);
            }
        }
    }

    TEST_CASE("external series are resampled by carrying the last value forward") {
        Fixture fx(6, 5);
        fx.externals["temp"] = ExternalSeries{"temp", {{1, 5.0}, {4, 9.0}}};
        KpiDefinition d = def(Lambda::external, 1);
        d.external = "temp";
        const auto s = compute_kpi_series(d, fx.inputs());
        std::vector<double> got;
        for (const auto& p : s.points) got.push_back(p.value);
        CHECK(got == std::vector<double>{5, 5, 5, 5, 9, 9});
        CHECK(s.metadata["resampling"] == "locf");

        d.external = "pressure";
        try {
            compute_kpi_series(d, fx.inputs());
            FAIL("expected UnknownExternal");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownExternal);
        }
    }

    TEST_CASE("definitions round-trip through JSON and bad ones are rejected") {
        KpiDefinition d = def(Lambda::edge_fraction, 4, Aggregator::max);
        d.region = RegionSelector::grid_cell;
        d.grid = 3;
        d.row = 2;
        d.col = 1;
        CHECK(kpi_from_json(kpi_to_json(d)) == d);
        CHECK_THROWS_AS(kpi_from_json(nlohmann::json{{"name", "x"}, {"lambda", "depth"}}), Error);
        CHECK_THROWS_AS(parse_kpi_config(nlohmann::json::array({kpi_to_json(d), kpi_to_json(d)})), Error);
        d.w = 0;
        CHECK_THROWS_AS(validate_definition(d, {}), Error);
    }

    TEST_CASE("series metadata records the Canny parameters and the empty-box fallback") {
        Fixture fx(5, 6);
        auto d = def(Lambda::edge_fraction, 1);
        d.region = RegionSelector::detected_boxes;
        const auto s = compute_kpi_series(d, fx.inputs());
        CHECK(s.metadata["canny"]["sigma"] == 1.4);
        CHECK(s.metadata["canny"]["high"] == 150.0);
        CHECK(s.metadata["empty_box_fallback"] == "whole_frame");
        CHECK(s.metadata["alignment"] == "window_end");
    }

    TEST_CASE("series CSV") {
        const Series s{{0, 1.5}, {1, 0.1}};
        CHECK(series_to_csv(s) == "frame,value\n0,1.5\n1,0.1\n");
        CHECK(slice_series(s, 1, 5) == Series{{1, 0.1}});
    }
}
