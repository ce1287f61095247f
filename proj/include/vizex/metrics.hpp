#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizex/ingest.hpp"
#include "vizex/series.hpp"

namespace vizex {

enum class ErrorClass : int { undercount = -1, correct = 0, overcount = 1 };

enum class MetricKind { error_class, correct_rate, custom };

struct MetricSeries {
    std::string name;
    MetricKind kind = MetricKind::custom;
    Series points;
};

std::string_view to_string(MetricKind kind);

ErrorClass count_error_class(int det_count, int gt_count);

// One point per frame: the counting-error class for `label`.
MetricSeries error_series(const PredictionLog& pred, const PredictionLog& gt, const std::string& label);

// Fraction of frames in each trailing window of w with class == correct.
MetricSeries correct_rate(const MetricSeries& errors, int w);

double iou(const Box& a, const Box& b);

struct MatchPair {
    int gt_id = 0;
    int det_id = 0;
    double iou = 0.0;
};

struct Matching {
    std::vector<MatchPair> pairs;
    std::vector<int> unmatched_gt;
    std::vector<int> unmatched_det;
};

// Greedy by descending IoU, ties to the lexicographically smaller (gt_id, det_id).
Matching match_boxes(std::span<const Box> gt, std::span<const Box> det, double iou_threshold = 0.5);

enum class HeatmapKind { overcount, undercount };

struct Heatmap {
    HeatmapKind kind = HeatmapKind::overcount;
    int grid_rows = 0;
    int grid_cols = 0;
    int frame_count = 0;
    std::vector<std::vector<long long>> counts;  // unmatched boxes per cell
    std::vector<std::vector<double>> cells;      // counts / frame_count

    long long total_count() const;
};

std::string_view to_string(HeatmapKind kind);

struct HeatmapPair {
    Heatmap overcount;
    Heatmap undercount;
};

// Unmatched detections (overcount) and unmatched ground truth (undercount)
// binned by box centre.
HeatmapPair error_heatmap(const PredictionLog& pred, const PredictionLog& gt, const Manifest& manifest,
                          const std::string& label, int grid_rows = 4, int grid_cols = 4, double iou_threshold = 0.5);

nlohmann::json heatmap_to_json(const Heatmap& h);

}  // namespace vizex
