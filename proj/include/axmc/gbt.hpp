#pragma once

#include "axmc/data.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include <json.hpp>

namespace axmc::gbt {

struct BoosterParams {
    double eta = 0.1;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double subsample = 1.0;
    double colsample = 1.0;
    double lambda = 1.0;
    double gamma = 0.0078125;  // 2^-7
    int max_rounds = 100;
    std::uint64_t seed = 0;

    // Tuning bounds. Log-scale fields are searched on log2.
    static constexpr double eta_min = 0.01, eta_max = 0.3;
    static constexpr int depth_min = 1, depth_max = 12;
    static constexpr double mcw_min = 0.0625, mcw_max = 16.0;
    static constexpr double subsample_min = 0.5, subsample_max = 1.0;
    static constexpr double colsample_min = 0.5, colsample_max = 1.0;
    static constexpr double lambda_min = 0x1.0p-10, lambda_max = 0x1.0p10;
    static constexpr double gamma_min = 0x1.0p-7, gamma_max = 0x1.0p6;
    static constexpr int rounds_min = 10, rounds_max = 500;

    /// Throws Error(argument) naming the first out-of-bound field.
    void validate() const;

    nlohmann::json to_json() const;
    static BoosterParams from_json(const nlohmann::json& j);

    friend bool operator==(const BoosterParams&, const BoosterParams&) = default;
};

/// Column layout the model was trained on; one-hot columns map back to their source.
struct FeatureMap {
    std::vector<std::string> columns;
    std::vector<std::size_t> source_of;
    std::vector<std::string> sources;

    static FeatureMap of(const Dataset& data);
    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x < threshold goes left
    bool default_left = true;   // route for missing values
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // leaf weight, already scaled by eta

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    std::vector<TreeNode> nodes;

    /// `value(f)` returns feature f of the row being routed.
    template <typename RowValue>
    double leaf_value(RowValue&& value) const {
        std::int32_t i = 0;
        while (!nodes[i].is_leaf()) {
            const auto& node = nodes[i];
            const double x = value(node.feature);
            i = (x != x) ? (node.default_left ? node.left : node.right) : (x < node.threshold ? node.left : node.right);
        }
        return nodes[i].value;
    }

    std::size_t split_count() const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

/// Cumulative per-round margins: row n-1 holds the margin after the first n trees.
class StagedMargins {
public:
    StagedMargins() = default;
    StagedMargins(std::size_t rounds, std::size_t rows) : rounds_(rounds), rows_(rows), values_(rounds * rows) {}

    std::size_t rounds() const { return rounds_; }
    std::size_t rows() const { return rows_; }

    /// Margins after n rounds, 1 <= n <= rounds().
    std::span<const double> at(std::size_t n) const;
    std::span<double> mutable_at(std::size_t n) { return {values_.data() + (n - 1) * rows_, rows_}; }

private:
    std::size_t rounds_ = 0;
    std::size_t rows_ = 0;
    std::vector<double> values_;
};

class BoostedModel {
public:
    BoostedModel() = default;

    double base_score() const { return base_score_; }
    const std::vector<Tree>& trees() const { return trees_; }
    std::size_t rounds_trained() const { return trees_.size(); }
    const BoosterParams& params() const { return params_; }
    const FeatureMap& feature_map() const { return feature_map_; }
    /// Split counts per round, indexed [round][source feature].
    const std::vector<std::vector<std::uint32_t>>& feature_usage() const { return feature_usage_; }

    /// Margin of one dense row after n rounds; no range checks.
    double margin_row(std::span<const double> row, std::size_t n) const;

    nlohmann::json to_json() const;
    static BoostedModel from_json(const nlohmann::json& j);

    /// Assembles a model directly from trees; used for hand-built fixtures.
    static BoostedModel from_trees(double base_score, std::vector<Tree> trees, FeatureMap map,
                                   BoosterParams params = {});

    friend bool operator==(const BoostedModel&, const BoostedModel&) = default;

private:
    friend BoostedModel train(const Dataset&, const BoosterParams&, unsigned);
    void rebuild_usage();

    double base_score_ = 0.0;
    std::vector<Tree> trees_;
    BoosterParams params_;
    FeatureMap feature_map_;
    std::vector<std::vector<std::uint32_t>> feature_usage_;
};

/// Second-order boosting on log loss with exact greedy splits. `threads` > 1
/// scans features in parallel; the result is identical to the serial scan.
BoostedModel train(const Dataset& train, const BoosterParams& params, unsigned threads = 1);

std::vector<double> predict_margin(const BoostedModel& model, const Dataset& rows, std::size_t n);
std::vector<double> predict_proba(const BoostedModel& model, const Dataset& rows, std::size_t n);
StagedMargins staged_margins(const BoostedModel& model, const Dataset& rows);

/// Source features split on anywhere in the first n trees.
std::set<std::size_t> features_used(const BoostedModel& model, std::size_t n);

inline double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

double log_loss(std::span<const std::uint8_t> labels, std::span<const double> margins);

}  // namespace axmc::gbt
