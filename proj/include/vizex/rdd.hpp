#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizex/series.hpp"

namespace vizex {

enum class Side { left, right };

// OLS line over one side of a cut, parameterized at t = cut.
struct LinearFit {
    double intercept_at_cut = 0.0;
    double slope = 0.0;
    double residual_variance = 0.0;
    double se_intercept = 0.0;
    int n = 0;

    double value_at(int t, int cut) const { return intercept_at_cut + slope * (t - cut); }
};

// Cut c sits between frames c-1 and c. The left window is [c-w, c-1], the
// right window [c, c+w-1]. tau is the gap between the two fitted lines at
// the boundary t = c - 1/2; se_tau is its standard error there.
struct DiscontinuityEstimate {
    std::string series_name;
    int cutpoint = 0;
    double tau = 0.0;
    double se_tau = 0.0;
    double t_stat = 0.0;
    int bandwidth = 0;
    LinearFit left;
    LinearFit right;
};

struct AssociationEvidence {
    DiscontinuityEstimate kpi_disc;
    DiscontinuityEstimate metric_disc;
    int lag = 0;  // kpi cut - metric cut
    double score = 0.0;
};

// Fits the points (any order) whose frame falls in the side's window.
// Throws InsufficientData (< 2 points) or DegenerateDesign (all t equal).
LinearFit local_linear_fit(std::span<const SeriesPoint> points, int cut, Side side, int bandwidth);

// `series` must be sorted by strictly increasing frame.
DiscontinuityEstimate discontinuity_at(std::span<const SeriesPoint> series, int cut, int bandwidth,
                                       const std::string& series_name = {});

// Cuts c with frames.front() + w <= c <= frames.back() - w + 1 and at least
// two points on each side.
std::vector<int> admissible_cuts(std::span<const SeriesPoint> series, int bandwidth);

std::vector<DiscontinuityEstimate> scan_discontinuities(std::span<const SeriesPoint> series, int bandwidth,
                                                        double t_threshold, int min_separation,
                                                        const std::string& series_name = {});

// Largest |t| over the cuts in [first, last] that are admissible; 0 when none.
double max_abs_t(std::span<const SeriesPoint> series, int bandwidth);

std::vector<AssociationEvidence> associate(std::span<const DiscontinuityEstimate> kpi_discs,
                                           std::span<const DiscontinuityEstimate> metric_discs, int tolerance_delta);

// (1 - alpha) empirical quantile of the max |t| over all cuts of n_sims
// Gaussian white-noise series of length n. Simulation i draws from its own
// generator keyed by (seed, i), so results do not depend on evaluation order.
double null_threshold(int n, int bandwidth, double alpha, int n_sims, std::uint64_t seed);

// Memoized null_threshold; safe to call concurrently.
double cached_null_threshold(int n, int bandwidth, double alpha, int n_sims, std::uint64_t seed);

// Generator seed for stream `index` under a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

nlohmann::json to_json(const DiscontinuityEstimate& d);
nlohmann::json to_json(const AssociationEvidence& e);
nlohmann::json fit_to_json(const LinearFit& f);
// Infinite t statistics become the strings "Infinity" / "-Infinity".
nlohmann::json json_number(double v);

}  // namespace vizex
