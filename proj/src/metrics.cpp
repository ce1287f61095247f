#include "vizex/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "vizex/error.hpp"

namespace vizex {

std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::error_class: return "error_class";
        case MetricKind::correct_rate: return "correct_rate";
        case MetricKind::custom: return "custom";
    }
    return "?";
}

std::string_view to_string(HeatmapKind kind) {
    return kind == HeatmapKind::overcount ? "overcount" : "undercount";
}

ErrorClass count_error_class(int det_count, int gt_count) {
    if (det_count < gt_count) return ErrorClass::undercount;
    if (det_count > gt_count) return ErrorClass::overcount;
    return ErrorClass::correct;
}

namespace {

int count_label(const std::vector<Box>& boxes, const std::string& label) {
    return static_cast<int>(std::count_if(boxes.begin(), boxes.end(), [&](const Box& b) { return b.label == label; }));
}

std::vector<Box> with_label(const std::vector<Box>& boxes, const std::string& label) {
    std::vector<Box> out;
    for (const auto& b : boxes) {
        if (b.label == label) out.push_back(b);
    }
    return out;
}

}  // namespace

MetricSeries error_series(const PredictionLog& pred, const PredictionLog& gt, const std::string& label) {
    if (pred.frames.size() != gt.frames.size()) {
        throw Error(ErrorCode::InvalidArgument, "prediction and ground-truth logs cover different frame ranges");
    }
    MetricSeries s{"count_error", MetricKind::error_class, {}};
    s.points.reserve(pred.frames.size());
    for (std::size_t f = 0; f < pred.frames.size(); ++f) {
        const auto cls = count_error_class(count_label(pred.frames[f], label), count_label(gt.frames[f], label));
        s.points.push_back({static_cast<int>(f), static_cast<double>(static_cast<int>(cls))});
    }
    return s;
}

MetricSeries correct_rate(const MetricSeries& errors, int w) {
    if (w < 1) throw Error(ErrorCode::InvalidArgument, "correct_rate window must be >= 1");
    MetricSeries s{"correct_rate", MetricKind::correct_rate, {}};
    const auto& pts = errors.points;
    for (std::size_t i = static_cast<std::size_t>(w - 1); i < pts.size(); ++i) {
        int correct = 0;
        for (std::size_t k = i + 1 - static_cast<std::size_t>(w); k <= i; ++k) correct += pts[k].value == 0.0 ? 1 : 0;
        s.points.push_back({pts[i].frame, static_cast<double>(correct) / w});
    }
    return s;
}

double iou(const Box& a, const Box& b) {
    const long long ix = std::max(0LL, std::min<long long>(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const long long iy = std::max(0LL, std::min<long long>(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const long long inter = ix * iy;
    const long long uni = static_cast<long long>(a.w) * a.h + static_cast<long long>(b.w) * b.h - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

Matching match_boxes(std::span<const Box> gt, std::span<const Box> det, double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "IoU threshold must lie in (0, 1]");
    }
    std::vector<MatchPair> candidates;
    for (std::size_t g = 0; g < gt.size(); ++g) {
        for (std::size_t d = 0; d < det.size(); ++d) {
            const double v = iou(gt[g], det[d]);
            if (v >= iou_threshold) candidates.push_back({static_cast<int>(g), static_cast<int>(d), v});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
        return a.det_id < b.det_id;
    });
    Matching m;
    std::vector<bool> gt_used(gt.size(), false), det_used(det.size(), false);
    for (const auto& c : candidates) {
        if (gt_used[static_cast<std::size_t>(c.gt_id)] || det_used[static_cast<std::size_t>(c.det_id)]) continue;
        gt_used[static_cast<std::size_t>(c.gt_id)] = true;
        det_used[static_cast<std::size_t>(c.det_id)] = true;
        m.pairs.push_back(c);
    }
    for (std::size_t g = 0; g < gt.size(); ++g) {
        if (!gt_used[g]) m.unmatched_gt.push_back(static_cast<int>(g));
    }
    for (std::size_t d = 0; d < det.size(); ++d) {
        if (!det_used[d]) m.unmatched_det.push_back(static_cast<int>(d));
    }
    return m;
}

long long Heatmap::total_count() const {
    long long total = 0;
    for (const auto& row : counts) {
        for (long long c : row) total += c;
    }
    return total;
}

HeatmapPair error_heatmap(const PredictionLog& pred, const PredictionLog& gt, const Manifest& manifest,
                          const std::string& label, int grid_rows, int grid_cols, double iou_threshold) {
    if (grid_rows < 1 || grid_cols < 1) throw Error(ErrorCode::InvalidArgument, "heatmap grid must be at least 1x1");
    if (pred.frames.size() != gt.frames.size()) {
        throw Error(ErrorCode::InvalidArgument, "prediction and ground-truth logs cover different frame ranges");
    }
    auto blank = [&](HeatmapKind kind) {
        Heatmap h;
        h.kind = kind;
        h.grid_rows = grid_rows;
        h.grid_cols = grid_cols;
        h.frame_count = static_cast<int>(pred.frames.size());
        h.counts.assign(static_cast<std::size_t>(grid_rows), std::vector<long long>(static_cast<std::size_t>(grid_cols), 0));
        return h;
    };
    HeatmapPair out{blank(HeatmapKind::overcount), blank(HeatmapKind::undercount)};

    auto bin = [&](Heatmap& h, const Box& b) {
        const int col = std::clamp(static_cast<int>(std::floor(b.center_x() * grid_cols / manifest.width)), 0, grid_cols - 1);
        const int row = std::clamp(static_cast<int>(std::floor(b.center_y() * grid_rows / manifest.height)), 0, grid_rows - 1);
        ++h.counts[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
    };

    for (std::size_t f = 0; f < pred.frames.size(); ++f) {
        const auto g = with_label(gt.frames[f], label);
        const auto d = with_label(pred.frames[f], label);
        const auto m = match_boxes(g, d, iou_threshold);
        for (int id : m.unmatched_det) bin(out.overcount, d[static_cast<std::size_t>(id)]);
        for (int id : m.unmatched_gt) bin(out.undercount, g[static_cast<std::size_t>(id)]);
    }
    for (Heatmap* h : {&out.overcount, &out.undercount}) {
        h->cells.assign(h->counts.size(), std::vector<double>(static_cast<std::size_t>(grid_cols), 0.0));
        for (std::size_t r = 0; r < h->counts.size(); ++r) {
            for (std::size_t c = 0; c < h->counts[r].size(); ++c) {
                h->cells[r][c] = h->frame_count > 0 ? static_cast<double>(h->counts[r][c]) / h->frame_count : 0.0;
            }
        }
    }
    return out;
}

nlohmann::json heatmap_to_json(const Heatmap& h) {
    return {{"kind", std::string(to_string(h.kind))},
            {"grid_rows", h.grid_rows},
            {"grid_cols", h.grid_cols},
            {"frame_count", h.frame_count},
            {"counts", h.counts},
            {"cells", h.cells}};
}

}  // namespace vizex
