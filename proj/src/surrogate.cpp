#include "vizex/surrogate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include "vizex/error.hpp"
#include "vizex/metrics.hpp"
#include "vizex/series.hpp"

namespace vizex {

namespace {

constexpr std::array<const char*, 5> kFeatureSuffixes{"avg_r", "avg_g", "avg_b", "luminosity", "edge_fraction"};

void push_features(std::vector<double>& row, const RegionFeatures& f) {
    row.push_back(f.color.r);
    row.push_back(f.color.g);
    row.push_back(f.color.b);
    row.push_back(f.luminosity);
    row.push_back(f.edge_fraction);
}

RegionFeatures rect_features(const Frame& frame, std::span<const std::uint8_t> mask, const Rect& r) {
    RegionFeatures f;
    f.color = average_color(view_of(frame), r);
    f.luminosity = luminosity(view_of(frame), r);
    f.edge_fraction = edge_fraction_from_mask(mask, frame.width, r);
    return f;
}

std::vector<Box> labelled(const std::vector<Box>& boxes, const std::string& label) {
    std::vector<Box> out;
    std::copy_if(boxes.begin(), boxes.end(), std::back_inserter(out), [&](const Box& b) { return b.label == label; });
    return out;
}

int class_index(int label) {
    switch (label) {
        case -1: return 0;
        case 0: return 1;
        case 1: return 2;
        default: throw Error(ErrorCode::InvalidArgument, "label must be -1, 0 or 1");
    }
}

std::array<long, 3> count_classes(std::span<const int> labels, std::span<const std::size_t> idx) {
    std::array<long, 3> c{};
    for (auto i : idx) ++c[static_cast<std::size_t>(class_index(labels[i]))];
    return c;
}

int leaf_prediction(const std::array<long, 3>& counts, const std::array<double, 3>& w) {
    std::size_t best = 0;
    double best_v = -1.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double v = static_cast<double>(counts[c]) * w[c];
        if (counts[c] > 0 && v > best_v) {
            best_v = v;
            best = c;
        }
    }
    return kClasses[best];
}

struct Split {
    double impurity = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

class Grower {
public:
    Grower(const std::vector<std::vector<double>>& rows, std::span<const int> labels, TreeModel& model)
        : rows_(rows), labels_(labels), model_(model) {}

    int grow(std::vector<std::size_t> idx, int depth) {
        const int id = static_cast<int>(model_.nodes.size());
        model_.nodes.emplace_back();
        TreeNode node;
        node.depth = depth;
        node.counts = count_classes(labels_, idx);
        node.prediction = leaf_prediction(node.counts, model_.class_weights);
        const int present = static_cast<int>(std::count_if(node.counts.begin(), node.counts.end(), [](long c) { return c > 0; }));
        if (depth < model_.max_depth && present > 1) {
            if (auto split = best_split(idx)) {
                node.feature = split->feature;
                node.threshold = split->threshold;
                std::vector<std::size_t> left, right;
                for (auto i : idx) (rows_[i][static_cast<std::size_t>(split->feature)] <= split->threshold ? left : right).push_back(i);
                model_.nodes[static_cast<std::size_t>(id)] = node;
                const int l = grow(std::move(left), depth + 1);
                const int r = grow(std::move(right), depth + 1);
                model_.nodes[static_cast<std::size_t>(id)].left = l;
                model_.nodes[static_cast<std::size_t>(id)].right = r;
                return id;
            }
        }
        model_.nodes[static_cast<std::size_t>(id)] = node;
        return id;
    }

private:
    std::optional<Split> best_split(const std::vector<std::size_t>& idx) const {
        std::optional<Split> best;
        const std::size_t cols = rows_.empty() ? 0 : rows_[idx.front()].size();
        const auto total = count_classes(labels_, idx);
        std::vector<std::size_t> order(idx);
        for (std::size_t col = 0; col < cols; ++col) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return std::tie(rows_[a][col], a) < std::tie(rows_[b][col], b);
            });
            std::array<long, 3> left{};
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                ++left[static_cast<std::size_t>(class_index(labels_[order[k]]))];
                const double a = rows_[order[k]][col];
                const double b = rows_[order[k + 1]][col];
                if (!(a < b)) continue;
                std::array<long, 3> right{};
                for (std::size_t c = 0; c < 3; ++c) right[c] = total[c] - left[c];
                double thr = a + (b - a) / 2.0;
                if (!(thr < b)) thr = a;
                const Split s{split_impurity(left, right, model_.class_weights), static_cast<int>(col), thr};
                if (!best || std::tie(s.impurity, s.feature, s.threshold) < std::tie(best->impurity, best->feature, best->threshold)) {
                    best = s;
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& rows_;
    std::span<const int> labels_;
    TreeModel& model_;
};

double parse_real(std::string_view s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw Error(ErrorCode::MalformedRow, "not a number: '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

const std::vector<std::string>& feature_column_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> scopes{"whole"};
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) scopes.push_back("cell_" + std::to_string(r) + "_" + std::to_string(c));
        }
        scopes.push_back("gt");
        scopes.push_back("det");
        std::vector<std::string> out;
        for (const auto& s : scopes) {
            for (const char* f : kFeatureSuffixes) out.push_back(s + "_" + f);
        }
        return out;
    }();
    return names;
}

void FeatureTable::append(const FeatureTable& o) {
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
    labels.insert(labels.end(), o.labels.begin(), o.labels.end());
    scene_ids.insert(scene_ids.end(), o.scene_ids.begin(), o.scene_ids.end());
    frames.insert(frames.end(), o.frames.begin(), o.frames.end());
}

FeatureTable build_feature_table(std::span<const Frame> frames, const Manifest& manifest, const PredictionLog& pred,
                                 const PredictionLog& gt, int stride, const std::string& scene_id,
                                 const CannyParams& canny) {
    if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
    FeatureTable t;
    const auto& label = manifest.label_of_interest;
    for (std::size_t f = 0; f < frames.size(); f += static_cast<std::size_t>(stride)) {
        const Frame& frame = frames[f];
        const auto mask = canny_edge_mask(frame, canny);
        std::vector<double> row;
        row.reserve(kFeatureCount);
        push_features(row, whole_frame_features(frame, mask));
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                push_features(row, rect_features(frame, mask, Region::grid_cell(frame.width, frame.height, 4, 4, r, c).rect));
            }
        }
        const auto gt_boxes = f < gt.frames.size() ? labelled(gt.frames[f], label) : std::vector<Box>{};
        const auto det_boxes = f < pred.frames.size() ? labelled(pred.frames[f], label) : std::vector<Box>{};
        push_features(row, box_region_features(frame, gt_boxes, mask));
        push_features(row, box_region_features(frame, det_boxes, mask));
        t.rows.push_back(std::move(row));
        t.labels.push_back(static_cast<int>(count_error_class(static_cast<int>(det_boxes.size()), static_cast<int>(gt_boxes.size()))));
        t.scene_ids.push_back(scene_id);
        t.frames.push_back(static_cast<int>(f));
    }
    return t;
}

std::string feature_table_to_csv(const FeatureTable& table) {
    std::string out;
    for (const auto& name : feature_column_names()) out += name + ",";
    out += "label\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (double v : table.rows[i]) out += format_double(v) + ",";
        out += std::to_string(table.labels[i]) + "\n";
    }
    return out;
}

FeatureTable feature_table_from_csv(std::string_view text) {
    FeatureTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, "empty feature table");
    std::string expected;
    for (const auto& name : feature_column_names()) expected += name + ",";
    expected += "label";
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected) throw Error(ErrorCode::MalformedRow, "unexpected feature table header");
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            row.push_back(parse_real(std::string_view(line).substr(start, comma == std::string::npos ? line.npos : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (row.size() != kFeatureCount + 1) throw Error(ErrorCode::MalformedRow, "feature row needs 96 fields");
        const double label = row.back();
        row.pop_back();
        if (label != -1.0 && label != 0.0 && label != 1.0) throw Error(ErrorCode::MalformedRow, "label must be -1, 0 or 1");
        t.labels.push_back(static_cast<int>(label));
        t.rows.push_back(std::move(row));
        t.scene_ids.emplace_back();
        t.frames.push_back(static_cast<int>(t.frames.size()));
    }
    return t;
}

double weighted_gini(const std::array<long, 3>& counts, const std::array<double, 3>& w) {
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) total += w[c] * static_cast<double>(counts[c]);
    if (total <= 0.0) return 0.0;
    double sum_sq = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double p = w[c] * static_cast<double>(counts[c]) / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double split_impurity(const std::array<long, 3>& left, const std::array<long, 3>& right, const std::array<double, 3>& w) {
    double wl = 0.0, wr = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        wl += w[c] * static_cast<double>(left[c]);
        wr += w[c] * static_cast<double>(right[c]);
    }
    return (wl * weighted_gini(left, w) + wr * weighted_gini(right, w)) / (wl + wr);
}

std::array<double, 3> balanced_class_weights(std::span<const int> labels) {
    std::array<long, 3> counts{};
    for (int l : labels) ++counts[static_cast<std::size_t>(class_index(l))];
    const long k = std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; });
    std::array<double, 3> w{};
    for (std::size_t c = 0; c < 3; ++c) {
        if (counts[c] > 0) w[c] = static_cast<double>(labels.size()) / (static_cast<double>(k) * static_cast<double>(counts[c]));
    }
    return w;
}

TreeModel train_tree(const std::vector<std::vector<double>>& rows, std::span<const int> labels, int max_depth,
                     std::uint64_t seed) {
    if (rows.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "rows and labels differ in length");
    if (max_depth < 0) throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 0");
    if (rows.size() < 2 || std::set<int>(labels.begin(), labels.end()).size() < 2) {
        throw Error(ErrorCode::DegenerateLabels, "training needs at least 2 rows and 2 distinct labels");
    }
    for (const auto& r : rows) {
        if (r.size() != rows.front().size()) throw Error(ErrorCode::InvalidArgument, "ragged feature rows");
    }
    TreeModel model;
    model.max_depth = max_depth;
    model.seed = seed;
    model.class_weights = balanced_class_weights(labels);
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Grower(rows, labels, model).grow(std::move(idx), 0);
    return model;
}

TreeModel train_tree(const FeatureTable& table, int max_depth, std::uint64_t seed) {
    return train_tree(table.rows, table.labels, max_depth, seed);
}

int TreeModel::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

int TreeModel::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].prediction;
}

std::vector<int> TreeModel::predict(const std::vector<std::vector<double>>& rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict(r));
    return out;
}

nlohmann::json tree_to_json(const TreeModel& m) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : m.nodes) {
        nlohmann::json j{{"depth", n.depth}, {"prediction", n.prediction}, {"counts", n.counts}};
        if (n.feature >= 0) {
            j["feature"] = n.feature;
            j["threshold"] = n.threshold;
            j["left"] = n.left;
            j["right"] = n.right;
        }
        nodes.push_back(std::move(j));
    }
    return {{"max_depth", m.max_depth}, {"seed", m.seed}, {"class_weights", m.class_weights}, {"nodes", nodes}};
}

double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size() || labels.empty()) {
        throw Error(ErrorCode::InvalidArgument, "balanced_accuracy needs equal, non-empty inputs");
    }
    std::map<int, std::pair<long, long>> per_class;  // label -> (hits, total)
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& [hits, total] = per_class[labels[i]];
        ++total;
        if (predictions[i] == labels[i]) ++hits;
    }
    double sum = 0.0;
    for (const auto& [label, ht] : per_class) sum += static_cast<double>(ht.first) / static_cast<double>(ht.second);
    return sum / static_cast<double>(per_class.size());
}

BaselineReport evaluate_split(const std::map<std::string, FeatureTable>& tables,
                              const std::vector<std::string>& train_scenes,
                              const std::vector<std::string>& test_scenes, int max_depth, std::uint64_t seed) {
    auto gather = [&](const std::vector<std::string>& scenes) {
        FeatureTable t;
        for (const auto& s : scenes) {
            auto it = tables.find(s);
            if (it == tables.end()) throw Error(ErrorCode::InvalidArgument, "unknown scene '" + s + "'");
            t.append(it->second);
        }
        return t;
    };
    const auto train = gather(train_scenes);
    const auto test = gather(test_scenes);
    if (test.size() == 0) throw Error(ErrorCode::InvalidArgument, "test scenes have no rows");
    const auto model = train_tree(train, max_depth, seed);
    BaselineReport r;
    r.train_balanced_accuracy = balanced_accuracy(model.predict(train.rows), train.labels);
    r.test_balanced_accuracy = balanced_accuracy(model.predict(test.rows), test.labels);
    r.train_scenes = train_scenes;
    r.test_scenes = test_scenes;
    r.train_rows = train.size();
    r.test_rows = test.size();
    r.tree_depth = model.depth();
    return r;
}

nlohmann::json report_to_json(const BaselineReport& r) {
    return {{"train_balanced_accuracy", r.train_balanced_accuracy},
            {"test_balanced_accuracy", r.test_balanced_accuracy},
            {"train_scenes", r.train_scenes},
            {"test_scenes", r.test_scenes},
            {"train_rows", r.train_rows},
            {"test_rows", r.test_rows},
            {"tree_depth", r.tree_depth}};
}

}  // namespace vizex
