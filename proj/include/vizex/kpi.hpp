#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizex/features.hpp"
#include "vizex/ingest.hpp"
#include "vizex/series.hpp"

namespace vizex {

enum class Lambda { luminosity, avg_r, avg_g, avg_b, edge_fraction, detection_count, external };
enum class RegionSelector { whole_frame, grid_cell, gt_boxes, detected_boxes };
enum class Aggregator { mean, min, max };

struct KpiDefinition {
    std::string name;
    Lambda lambda = Lambda::luminosity;
    std::string external;  // series name when lambda == external
    RegionSelector region = RegionSelector::whole_frame;
    int grid = 4;
    int row = 0;
    int col = 0;
    int w = 1;
    Aggregator aggregator = Aggregator::mean;

    bool operator==(const KpiDefinition&) const = default;
};

struct KpiSeries {
    KpiDefinition definition;
    Series points;
    nlohmann::json metadata;
};

// Inclusive value range for a lambda; external series are unbounded.
std::pair<double, double> lambda_range(Lambda lambda);

std::string_view to_string(Lambda l);
std::string_view to_string(RegionSelector r);
std::string_view to_string(Aggregator a);

KpiDefinition kpi_from_json(const nlohmann::json& j);
nlohmann::json kpi_to_json(const KpiDefinition& def);

struct KpiConfig {
    std::vector<KpiDefinition> kpis;
    CannyParams canny;
    int correct_rate_window = 10;
};

// Accepts a bare array of definitions or {"kpis": [...], "canny": {...}, "correct_rate_window": n}.
KpiConfig parse_kpi_config(const nlohmann::json& j);
nlohmann::json kpi_config_to_json(const KpiConfig& config);

// Whole-frame luminosity, colour channels, edge fraction and person count.
std::vector<KpiDefinition> default_kpis();

// Checks name syntax, w >= 1, grid bounds and external references.
void validate_definition(const KpiDefinition& def, const std::map<std::string, ExternalSeries>& externals);

struct KpiInputs {
    const Manifest* manifest = nullptr;
    const std::vector<Frame>* frames = nullptr;  // null in log-only projects
    const PredictionLog* predictions = nullptr;
    const PredictionLog* ground_truth = nullptr;
    const std::map<std::string, ExternalSeries>* externals = nullptr;
    CannyParams canny;
};

// Per-frame value of the lambda over the region, before windowing.
std::vector<double> per_frame_values(const KpiDefinition& def, const KpiInputs& in);

// Sliding windows of w frames stamped at their last frame.
Series window_aggregate(std::span<const double> per_frame, int w, Aggregator aggregator);

KpiSeries compute_kpi_series(const KpiDefinition& def, const KpiInputs& in);

// Last observation carried forward onto 0..frame_count-1; frames before the
// first sample take the first sample's value.
std::vector<double> resample_locf(const ExternalSeries& series, int frame_count);

}  // namespace vizex
