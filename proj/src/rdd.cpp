#include "vizex/rdd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

#include "vizex/error.hpp"

namespace vizex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Residual spreads and effects below this fraction of the data scale are rounding noise.
constexpr double kRelativeFloor = 1e-12;

// The two windows mirror each other about t = cut - 1/2, so the jump is
// measured there; time reversal then maps it onto itself exactly.
constexpr double kBoundaryOffset = -0.5;

struct FitResult {
    LinearFit fit;
    double scale = 0.0;     // max |y| on the side
    double boundary = 0.0;  // fitted value at the boundary
    double boundary_se = 0.0;
};

// Two-pass OLS on x = t - cut.
FitResult fit_points(std::span<const SeriesPoint> pts, int cut) {
    const std::size_t n = pts.size();
    if (n < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 points on each side of the cut");
    double mx = 0.0, my = 0.0, scale = 0.0;
    for (const auto& p : pts) {
        mx += static_cast<double>(p.frame - cut);
        my += p.value;
        scale = std::max(scale, std::abs(p.value));
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    bool constant_y = true;
    for (const auto& p : pts) {
        const double dx = static_cast<double>(p.frame - cut) - mx;
        sxx += dx * dx;
        sxy += dx * (p.value - my);
        constant_y = constant_y && p.value == pts[0].value;
    }
    if (sxx == 0.0) throw Error(ErrorCode::DegenerateDesign, "all points share one frame index");

    FitResult r;
    r.scale = scale;
    LinearFit& f = r.fit;
    f.n = static_cast<int>(n);
    if (constant_y) {
        f.slope = 0.0;
        f.intercept_at_cut = pts[0].value;
        f.residual_variance = 0.0;
        f.se_intercept = n > 2 ? 0.0 : kInf;
        r.boundary = f.intercept_at_cut;
        r.boundary_se = f.se_intercept;
        return r;
    }
    f.slope = sxy / sxx;
    f.intercept_at_cut = my - f.slope * mx;
    r.boundary = my + f.slope * (kBoundaryOffset - mx);
    if (n == 2) {
        f.residual_variance = 0.0;
        f.se_intercept = kInf;
        r.boundary_se = kInf;
        return r;
    }
    double rss = 0.0;
    for (const auto& p : pts) {
        const double e = p.value - (f.intercept_at_cut + f.slope * static_cast<double>(p.frame - cut));
        rss += e * e;
    }
    f.residual_variance = rss / static_cast<double>(n - 2);
    if (std::sqrt(f.residual_variance) <= kRelativeFloor * scale) f.residual_variance = 0.0;
    f.se_intercept = std::sqrt(f.residual_variance * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    const double db = kBoundaryOffset - mx;
    r.boundary_se = std::sqrt(f.residual_variance * (1.0 / static_cast<double>(n) + db * db / sxx));
    return r;
}

void require_sorted(std::span<const SeriesPoint> s) {
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i].frame <= s[i - 1].frame) {
            throw Error(ErrorCode::InvalidArgument, "series frames must be strictly increasing");
        }
    }
}

std::size_t lower_index(std::span<const SeriesPoint> s, int frame) {
    return static_cast<std::size_t>(
        std::lower_bound(s.begin(), s.end(), frame, [](const SeriesPoint& p, int f) { return p.frame < f; }) - s.begin());
}

struct Windows {
    std::span<const SeriesPoint> left;
    std::span<const SeriesPoint> right;
};

Windows windows_at(std::span<const SeriesPoint> s, int cut, int w) {
    const auto a = lower_index(s, cut - w);
    const auto b = lower_index(s, cut);
    const auto c = lower_index(s, cut + w);
    return {s.subspan(a, b - a), s.subspan(b, c - b)};
}

DiscontinuityEstimate estimate_from(const Windows& win, int cut, int bandwidth, const std::string& name) {
    const auto l = fit_points(win.left, cut);
    const auto r = fit_points(win.right, cut);
    DiscontinuityEstimate d;
    d.series_name = name;
    d.cutpoint = cut;
    d.bandwidth = bandwidth;
    d.left = l.fit;
    d.right = r.fit;
    d.tau = r.boundary - l.boundary;
    d.se_tau = std::sqrt(l.boundary_se * l.boundary_se + r.boundary_se * r.boundary_se);
    if (d.se_tau > 0.0) {
        d.t_stat = d.tau / d.se_tau;
    } else if (std::abs(d.tau) <= kRelativeFloor * std::max(l.scale, r.scale)) {
        d.t_stat = 0.0;
    } else {
        d.t_stat = std::copysign(kInf, d.tau);
    }
    return d;
}

void check_bandwidth(int bandwidth) {
    if (bandwidth < 2) throw Error(ErrorCode::InvalidArgument, "bandwidth must be >= 2");
}

}  // namespace

LinearFit local_linear_fit(std::span<const SeriesPoint> points, int cut, Side side, int bandwidth) {
    if (bandwidth < 1) throw Error(ErrorCode::InvalidArgument, "bandwidth must be >= 1");
    const int lo = side == Side::left ? cut - bandwidth : cut;
    const int hi = side == Side::left ? cut - 1 : cut + bandwidth - 1;
    std::vector<SeriesPoint> sel;
    for (const auto& p : points) {
        if (p.frame >= lo && p.frame <= hi) sel.push_back(p);
    }
    return fit_points(sel, cut).fit;
}

DiscontinuityEstimate discontinuity_at(std::span<const SeriesPoint> series, int cut, int bandwidth,
                                       const std::string& series_name) {
    check_bandwidth(bandwidth);
    require_sorted(series);
    return estimate_from(windows_at(series, cut, bandwidth), cut, bandwidth, series_name);
}

std::vector<int> admissible_cuts(std::span<const SeriesPoint> series, int bandwidth) {
    std::vector<int> cuts;
    if (series.empty()) return cuts;
    for (int c = series.front().frame + bandwidth; c <= series.back().frame - bandwidth + 1; ++c) {
        const auto win = windows_at(series, c, bandwidth);
        if (win.left.size() >= 2 && win.right.size() >= 2) cuts.push_back(c);
    }
    return cuts;
}

std::vector<DiscontinuityEstimate> scan_discontinuities(std::span<const SeriesPoint> series, int bandwidth,
                                                        double t_threshold, int min_separation,
                                                        const std::string& series_name) {
    check_bandwidth(bandwidth);
    if (min_separation < 1) throw Error(ErrorCode::InvalidArgument, "min_separation must be >= 1");
    if (series.size() < static_cast<std::size_t>(2 * bandwidth)) {
        throw Error(ErrorCode::SeriesTooShort, "series '" + series_name + "' has " + std::to_string(series.size()) +
                                                   " points, needs at least " + std::to_string(2 * bandwidth));
    }
    require_sorted(series);

    std::vector<DiscontinuityEstimate> candidates;
    for (int c : admissible_cuts(series, bandwidth)) {
        auto d = estimate_from(windows_at(series, c, bandwidth), c, bandwidth, series_name);
        const double a = std::abs(d.t_stat);
        if (a > 0.0 && a >= t_threshold) candidates.push_back(std::move(d));
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        const double ta = std::abs(a.t_stat), tb = std::abs(b.t_stat);
        if (ta != tb) return ta > tb;
        return a.cutpoint < b.cutpoint;
    });
    std::vector<DiscontinuityEstimate> accepted;
    for (auto& d : candidates) {
        const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](const DiscontinuityEstimate& a) {
            return std::abs(a.cutpoint - d.cutpoint) < min_separation;
        });
        if (clear) accepted.push_back(std::move(d));
    }
    return accepted;
}

double max_abs_t(std::span<const SeriesPoint> series, int bandwidth) {
    check_bandwidth(bandwidth);
    double best = 0.0;
    for (int c : admissible_cuts(series, bandwidth)) {
        const auto d = estimate_from(windows_at(series, c, bandwidth), c, bandwidth, {});
        best = std::max(best, std::abs(d.t_stat));
    }
    return best;
}

std::vector<AssociationEvidence> associate(std::span<const DiscontinuityEstimate> kpi_discs,
                                           std::span<const DiscontinuityEstimate> metric_discs, int tolerance_delta) {
    if (tolerance_delta < 0) throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
    std::vector<AssociationEvidence> out;
    for (const auto& k : kpi_discs) {
        for (const auto& m : metric_discs) {
            const int lag = k.cutpoint - m.cutpoint;
            if (std::abs(lag) > tolerance_delta) continue;
            out.push_back({k, m, lag, std::min(std::abs(k.t_stat), std::abs(m.t_stat))});
        }
    }
    std::sort(out.begin(), out.end(), [](const AssociationEvidence& a, const AssociationEvidence& b) {
        return std::tie(b.score, a.kpi_disc.cutpoint, a.metric_disc.cutpoint, a.kpi_disc.series_name,
                        a.metric_disc.series_name, a.kpi_disc.bandwidth, a.metric_disc.bandwidth) <
               std::tie(a.score, b.kpi_disc.cutpoint, b.metric_disc.cutpoint, b.kpi_disc.series_name,
                        b.metric_disc.series_name, b.kpi_disc.bandwidth, b.metric_disc.bandwidth);
    });
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double null_threshold(int n, int bandwidth, double alpha, int n_sims, std::uint64_t seed) {
    check_bandwidth(bandwidth);
    if (n_sims < 100) throw Error(ErrorCode::InvalidArgument, "null_threshold needs n_sims >= 100");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    if (n < 2 * bandwidth) throw Error(ErrorCode::SeriesTooShort, "null series shorter than two bandwidths");

    std::vector<double> maxima(static_cast<std::size_t>(n_sims));
    Series noise(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) noise[static_cast<std::size_t>(i)].frame = i;
    for (int s = 0; s < n_sims; ++s) {
        std::mt19937_64 gen(derive_seed(seed, static_cast<std::uint64_t>(s)));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& p : noise) p.value = normal(gen);
        maxima[static_cast<std::size_t>(s)] = max_abs_t(noise, bandwidth);
    }
    std::sort(maxima.begin(), maxima.end());
    const double rank = std::ceil((1.0 - alpha) * n_sims - 1e-9);
    const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, static_cast<double>(n_sims - 1)));
    return maxima[idx];
}

double cached_null_threshold(int n, int bandwidth, double alpha, int n_sims, std::uint64_t seed) {
    using Key = std::tuple<int, int, double, int, std::uint64_t>;
    static std::mutex mu;
    static std::map<Key, double> cache;
    const Key key{n, bandwidth, alpha, n_sims, seed};
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double v = null_threshold(n, bandwidth, alpha, n_sims, seed);
    std::lock_guard lock(mu);
    return cache.emplace(key, v).first->second;
}

nlohmann::json json_number(double v) {
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    if (std::isnan(v)) return nullptr;
    return v;
}

nlohmann::json fit_to_json(const LinearFit& f) {
    return {{"intercept_at_cut", f.intercept_at_cut},
            {"slope", f.slope},
            {"residual_variance", f.residual_variance},
            {"se_intercept", json_number(f.se_intercept)},
            {"n", f.n}};
}

nlohmann::json to_json(const DiscontinuityEstimate& d) {
    return {{"series", d.series_name},   {"cutpoint", d.cutpoint},         {"tau", d.tau},
            {"se_tau", json_number(d.se_tau)}, {"t_stat", json_number(d.t_stat)}, {"bandwidth", d.bandwidth}};
}

nlohmann::json to_json(const AssociationEvidence& e) {
    return {{"kpi", to_json(e.kpi_disc)}, {"metric", to_json(e.metric_disc)}, {"lag", e.lag}, {"score", json_number(e.score)}};
}

}  // namespace vizex
