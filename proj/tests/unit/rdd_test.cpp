#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "oracles/ols_oracle.hpp"
#include "vizex/rdd.hpp"

using namespace vizex;
using testing::code_of;
using testing::make_series;

namespace {

Series line(int n, double a, double b) {
    Series s;
    for (int t = 0; t < n; ++t) s.push_back({t, a * t + b});
    return s;
}

Series noisy_step(std::mt19937_64& rng, int n, int at, double size) {
    auto v = testing::gaussian_noise(rng, static_cast<std::size_t>(n));
    for (int t = at; t < n; ++t) v[t] += size;
    return make_series(v);
}

oracle::Ols oracle_side(const Series& s, int cut, int w, Side side) {
    std::vector<double> x, y;
    for (const auto& p : s) {
        const bool in = side == Side::left ? (p.frame >= cut - w && p.frame < cut) : (p.frame >= cut && p.frame < cut + w);
        if (in) {
            x.push_back(p.frame - cut);
            y.push_back(p.value);
        }
    }
    return oracle::normal_equations(x, y);
}


}  // namespace

TEST_SUITE("rdd") {
    TEST_CASE("fit on an exact line interpolates it") {
        const auto s = line(100, 2.0, 3.0);
        for (int c : {10, 37, 90}) {
            for (Side side : {Side::left, Side::right}) {
                const auto f = local_linear_fit(s, c, side, 10);
                CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
                CHECK(std::abs(f.intercept_at_cut - (2.0 * c + 3.0)) <= 1e-9);
                CHECK(f.residual_variance <= 1e-18);
            }
        }
        const auto flat = local_linear_fit(line(30, 0.0, 7.0), 15, Side::right, 10);
        CHECK(flat.slope == 0.0);
        CHECK(flat.intercept_at_cut == 7.0);
    }

    TEST_CASE("fit errors") {
        const auto s = line(30, 1.0, 0.0);
        CHECK(code_of([&] { local_linear_fit(s, 1, Side::left, 10); }) == ErrorCode::InsufficientData);
        const Series dup{{5, 1.0}, {5, 2.0}, {5, 3.0}};
        CHECK(code_of([&] { local_linear_fit(dup, 5, Side::right, 3); }) == ErrorCode::DegenerateDesign);
        const Series unsorted{{3, 1.0}, {1, 2.0}, {2, 0.0}, {0, 5.0}, {4, 3.0}, {5, 1.0}};
        CHECK_NOTHROW(local_linear_fit(unsorted, 3, Side::left, 3));
        CHECK(code_of([&] { discontinuity_at(unsorted, 3, 3); }) == ErrorCode::InvalidArgument);
    }

    TEST_CASE("fit matches the normal-equations oracle on noisy data") {
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> coef(-5, 5);
        for (int rep = 0; rep < 200; ++rep) {
            const double a = coef(rng), b = coef(rng);
            auto noise = testing::gaussian_noise(rng, 120, 0.5 + rep % 5);
            Series s;
            for (int t = 0; t < 120; ++t) s.push_back({t, a * t + b + noise[t]});
            const int cut = 60;
            for (Side side : {Side::left, Side::right}) {
                const auto f = local_linear_fit(s, cut, side, 50);
                const auto o = oracle_side(s, cut, 50, side);
                CHECK(std::abs(f.intercept_at_cut - o.intercept) <= 1e-9);
                CHECK(std::abs(f.slope - o.slope) <= 1e-9);
                CHECK(std::abs(f.residual_variance - o.residual_variance) <= 1e-9);
                CHECK(std::abs(f.se_intercept - o.se_intercept) <= 1e-9);
            }
        }
    }

    TEST_CASE("noiseless step, constant and ramp") {
        Series step;
        for (int t = 0; t < 100; ++t) step.push_back({t, t < 50 ? 10.0 : 20.0});
        const auto d = discontinuity_at(step, 50, 10);
        CHECK(d.tau == 10.0);
        CHECK(d.left.residual_variance == 0.0);
        CHECK(d.right.residual_variance == 0.0);
        CHECK(std::isinf(d.t_stat));
        CHECK(d.t_stat > 0);

        const auto c = discontinuity_at(line(80, 0.0, 4.0), 40, 10);
        CHECK(c.tau == 0.0);
        CHECK(c.t_stat == 0.0);

        const auto ramp = line(200, 1.0, 0.0);
        for (int cut : admissible_cuts(ramp, 10)) CHECK(std::abs(discontinuity_at(ramp, cut, 10).tau) <= 1e-9);
    }

    TEST_CASE("property: piecewise-linear step recovers the step exactly at the true cut") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(-10, 10);
        for (int rep = 0; rep < 100; ++rep) {
            const double slope = u(rng), base = u(rng), jump = u(rng);
            const int cut = 30 + rep % 40;
            Series s;
            for (int t = 0; t < 100; ++t) s.push_back({t, base + slope * t + (t >= cut ? jump : 0.0)});
            CHECK(std::abs(discontinuity_at(s, cut, 15).tau - jump) <= 1e-9);
        }
    }

    TEST_CASE("tau and its error are measured at the boundary between the windows") {
        std::mt19937_64 rng(14);
        const auto s = noisy_step(rng, 200, 100, 3.0);
        const auto d = discontinuity_at(s, 100, 20);
        const auto l = oracle_side(s, 100, 20, Side::left), r = oracle_side(s, 100, 20, Side::right);
        CHECK(std::abs(d.tau - ((r.intercept - 0.5 * r.slope) - (l.intercept - 0.5 * l.slope))) <= 1e-9);
        CHECK(std::abs(d.left.intercept_at_cut - l.intercept) <= 1e-9);
        CHECK(d.t_stat == doctest::Approx(d.tau / d.se_tau).epsilon(1e-15));
    }

    TEST_CASE("property: location, scale and time-reversal equivariance") {
        std::mt19937_64 rng(15);
        std::uniform_real_distribution<double> k(-100, 100), sc(0.01, 50);
        for (int rep = 0; rep < 50; ++rep) {
            const auto s = noisy_step(rng, 120, 60, 2.0);
            const double shift = k(rng), scale = sc(rng);
            Series shifted = s, scaled = s, reversed;
            for (auto& p : shifted) p.value += shift;
            for (auto& p : scaled) p.value *= scale;
            const int n = static_cast<int>(s.size());
            for (int i = 0; i < n; ++i) reversed.push_back({i, s[n - 1 - i].value});
            for (int cut : {20, 45, 60, 77, 100}) {
                const auto d = discontinuity_at(s, cut, 20);
                const auto ds = discontinuity_at(shifted, cut, 20);
                const auto dk = discontinuity_at(scaled, cut, 20);
                const auto dr = discontinuity_at(reversed, n - cut, 20);
                CHECK(std::abs(ds.tau - d.tau) <= 1e-9);
                CHECK(std::abs(ds.t_stat - d.t_stat) <= 1e-9);
                CHECK(std::abs(dk.tau - scale * d.tau) <= 1e-9 * std::max(1.0, scale));
                CHECK(std::abs(dk.t_stat - d.t_stat) <= 1e-9);
                CHECK(std::abs(dr.tau + d.tau) <= 1e-9);
                CHECK(std::abs(std::abs(dr.t_stat) - std::abs(d.t_stat)) <= 1e-9);
            }
        }
    }

    TEST_CASE("scan: constant series and short series") {
        CHECK(scan_discontinuities(line(100, 0.0, 3.0), 10, 4.0, 5).empty());
        CHECK(code_of([] { scan_discontinuities(line(30, 0.0, 3.0), 20, 4.0, 5); }) == ErrorCode::SeriesTooShort);
    }

    TEST_CASE("scan: one planted 10 sigma step is found once near its cut") {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(seed);
            const auto s = noisy_step(rng, 200, 100, 10.0);
            const auto found = scan_discontinuities(s, 20, 4.0, 20);
            hits += found.size() == 1 && std::abs(found[0].cutpoint - 100) <= 2;
        }
        CHECK(hits >= 95);
    }

    TEST_CASE("scan: two steps 80 frames apart give two detections") {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(1000 + seed);
            auto v = testing::gaussian_noise(rng, 240);
            for (int t = 80; t < 240; ++t) v[t] += 10.0;
            for (int t = 160; t < 240; ++t) v[t] -= 10.0;
            const auto found = scan_discontinuities(make_series(v), 20, 4.0, 20);
            hits += found.size() == 2;
        }
        CHECK(hits >= 95);
    }

    TEST_CASE("scan output is ordered and separated") {
        std::mt19937_64 rng(16);
        const auto s = noisy_step(rng, 300, 150, 4.0);
        const auto found = scan_discontinuities(s, 15, 2.0, 10);
        for (std::size_t i = 0; i < found.size(); ++i) {
            CHECK(std::abs(found[i].t_stat) >= 2.0);
            if (i > 0) CHECK(std::abs(found[i].t_stat) <= std::abs(found[i - 1].t_stat));
            for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(found[i].cutpoint - found[j].cutpoint) >= 10);
        }
    }

    TEST_CASE("associate") {
        DiscontinuityEstimate k, m;
        k.cutpoint = 100;
        k.t_stat = 6.0;
        m.cutpoint = 103;
        m.t_stat = -4.5;
        const std::vector<DiscontinuityEstimate> ks{k}, ms{m}, none;
        CHECK(associate(ks, none, 5).empty());
        const auto ev = associate(ks, ms, 5);
        REQUIRE(ev.size() == 1);
        CHECK(ev[0].lag == -3);
        CHECK(ev[0].score == 4.5);
        m.cutpoint = 120;
        CHECK(associate(ks, std::vector<DiscontinuityEstimate>{m}, 5).empty());

        DiscontinuityEstimate k2 = k;
        k2.cutpoint = 105;
        k2.t_stat = 9.0;
        m.cutpoint = 103;
        const auto both = associate(std::vector<DiscontinuityEstimate>{k, k2}, std::vector<DiscontinuityEstimate>{m}, 5);
        CHECK(both.size() == 2);
        CHECK(both[0].score >= both[1].score);
    }

    TEST_CASE("null threshold: determinism, alpha = 1, monotone in alpha") {
        const double a = null_threshold(500, 20, 0.05, 500, 77);
        CHECK(a == null_threshold(500, 20, 0.05, 500, 77));
        CHECK(a == cached_null_threshold(500, 20, 0.05, 500, 77));

        // alpha = 1 is the smallest simulated maximum; recompute each simulation independently.
        double least = INFINITY;
        for (int i = 0; i < 100; ++i) {
            std::mt19937_64 gen(derive_seed(9, static_cast<std::uint64_t>(i)));
            std::normal_distribution<double> normal(0.0, 1.0);
            std::vector<double> v(120);
            for (auto& x : v) x = normal(gen);
            const auto s = make_series(v);
            double best = 0.0;
            for (int c = 10; c <= 111; ++c) best = std::max(best, std::abs(discontinuity_at(s, c, 10).t_stat));
            least = std::min(least, best);
        }
        CHECK(null_threshold(120, 10, 1.0, 100, 9) == least);
        CHECK(null_threshold(120, 10, 0.5, 100, 9) <= null_threshold(120, 10, 0.05, 100, 9));
        CHECK_THROWS_AS(null_threshold(120, 10, 0.05, 99, 9), Error);
        CHECK_THROWS_AS(null_threshold(120, 10, 0.0, 100, 9), Error);
    }

    TEST_CASE("infinite t statistics serialize as strings") {
        CHECK(json_number(INFINITY) == "Infinity");
        CHECK(json_number(-INFINITY) == "-Infinity");
        CHECK(json_number(1.5) == 1.5);
    }
}
