#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizex/features.hpp"
#include "vizex/ingest.hpp"

namespace vizex {

// Column order: scopes [whole, cell_<r>_<c> (4x4, row-major), gt, det], each
// with [avg_r, avg_g, avg_b, luminosity, edge_fraction].
inline constexpr int kFeatureCount = 95;
const std::vector<std::string>& feature_column_names();

struct FeatureTable {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // ErrorClass values
    std::vector<std::string> scene_ids;
    std::vector<int> frames;

    std::size_t size() const { return rows.size(); }
    void append(const FeatureTable& other);
};

// One row per frame f with f % stride == 0. Labels compare the counts of the
// manifest's label of interest; box scopes fall back to whole-frame values
// when a frame has no boxes.
FeatureTable build_feature_table(std::span<const Frame> frames, const Manifest& manifest, const PredictionLog& pred,
                                 const PredictionLog& gt, int stride, const std::string& scene_id = {},
                                 const CannyParams& canny = {});

std::string feature_table_to_csv(const FeatureTable& table);
FeatureTable feature_table_from_csv(std::string_view text);

inline constexpr std::array<int, 3> kClasses{-1, 0, 1};

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int depth = 0;
    int prediction = 0;
    std::array<long, 3> counts{};  // per class in kClasses order
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root, children follow in preorder
    std::array<double, 3> class_weights{};
    int max_depth = 10;
    std::uint64_t seed = 0;

    int depth() const;
    int predict(std::span<const double> row) const;
    std::vector<int> predict(const std::vector<std::vector<double>>& rows) const;
};

// Weighted Gini impurity of a class-count vector; 0 for an empty node.
double weighted_gini(const std::array<long, 3>& counts, const std::array<double, 3>& weights);
// Weight-averaged impurity of a two-way partition.
double split_impurity(const std::array<long, 3>& left, const std::array<long, 3>& right,
                      const std::array<double, 3>& weights);

// Balanced weights n / (K * n_c) over the K classes present in labels.
std::array<double, 3> balanced_class_weights(std::span<const int> labels);

// CART on Gini with balanced weights. Every threshold between adjacent
// distinct values is tried; ties go to (lower impurity, lower column, lower
// threshold), so growth is fully deterministic and the seed is only recorded.
TreeModel train_tree(const std::vector<std::vector<double>>& rows, std::span<const int> labels, int max_depth = 10,
                     std::uint64_t seed = 0);
TreeModel train_tree(const FeatureTable& table, int max_depth = 10, std::uint64_t seed = 0);

nlohmann::json tree_to_json(const TreeModel& model);

// Mean recall over the classes present in labels.
double balanced_accuracy(std::span<const int> predictions, std::span<const int> labels);

struct BaselineReport {
    double train_balanced_accuracy = 0.0;
    double test_balanced_accuracy = 0.0;
    std::vector<std::string> train_scenes;
    std::vector<std::string> test_scenes;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    int tree_depth = 0;
};

BaselineReport evaluate_split(const std::map<std::string, FeatureTable>& tables,
                              const std::vector<std::string>& train_scenes,
                              const std::vector<std::string>& test_scenes, int max_depth = 10,
                              std::uint64_t seed = 0);

nlohmann::json report_to_json(const BaselineReport& report);

}  // namespace vizex
