#pragma once

#include "axmc/pareto.hpp"
#include "axmc/rng.hpp"
#include "axmc/space.hpp"

#include <span>
#include <vector>

#include <json.hpp>

namespace axmc::mobo {

/// Per-objective bounds on scalarization weights.
struct WeightBox {
    std::vector<double> lower;
    std::vector<double> upper;

    static WeightBox unit(std::size_t k);
    /// k = 2 shorthand: w1 in [lo, hi], w2 unconstrained.
    static WeightBox first(double lo, double hi);

    std::size_t k() const { return lower.size(); }
    /// Throws Error(argument) unless 0 <= l <= u <= 1 and sum(l) <= 1 <= sum(u).
    void validate() const;
    bool contains(std::span<const double> w, double tol = 0.0) const;

    nlohmann::json to_json() const;
    static WeightBox from_json(const nlohmann::json& j, std::size_t k);
    friend bool operator==(const WeightBox&, const WeightBox&) = default;
};

inline constexpr int max_weight_rejections = 10000;

/// Uniform point of the simplex, rejected until it lies in the box.
/// Coordinates with l == u are pinned and the rest share the remaining mass.
/// Throws Error(infeasible_box) after max_weight_rejections consecutive misses.
std::vector<double> sample_weights(const WeightBox& box, Rng& rng);

struct ScalarizerConfig {
    double rho = 0.05;
    std::vector<double> min;
    std::vector<double> max;

    static ScalarizerConfig from_archive(const pareto::Archive& archive, double rho = 0.05);
};

/// Augmented Tchebycheff value on archive-normalized objectives (clipped to [0, 1]).
double scalarize(std::span<const double> y, std::span<const double> w, const ScalarizerConfig& cfg);

struct ForestParams {
    int trees = 100;
    int min_leaf = 5;
    int mtry = 0;  // 0 = ceil(d / 3)
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static ForestParams from_json(const nlohmann::json& j);
};

/// Bootstrap regression forest; immutable once fit.
class Surrogate {
public:
    /// X is row-major with `dims` columns. Throws Error(insufficient_data) below 4 rows.
    static Surrogate fit(std::span<const double> X, std::size_t dims, std::span<const double> y, const ForestParams& params);

    struct Prediction {
        double mean = 0.0;
        double sd = 0.0;
    };
    Prediction predict(std::span<const double> x) const;
    /// Individual tree predictions for x.
    std::vector<double> tree_predictions(std::span<const double> x) const;

    std::size_t dims() const { return dims_; }
    std::size_t size() const { return trees_.size(); }

private:
    struct Node {
        std::int32_t feature = -1;
        double threshold = 0.0;  // x <= threshold goes left
        std::int32_t left = -1, right = -1;
        double value = 0.0;
    };
    using Tree = std::vector<Node>;
    static double eval(const Tree& tree, std::span<const double> x);

    std::size_t dims_ = 0;
    std::vector<Tree> trees_;
};

/// Builds the surrogate over archive records: encoded config -> scalarized measures.
Surrogate fit_surrogate(const pareto::Archive& archive, std::span<const double> w, const ScalarizerConfig& cfg,
                        const ConfigSpace& space, const ForestParams& params);

double expected_improvement(double mu, double sd, double best);

inline constexpr int incumbent_mutations = 10;

/// n_candidates uniform draws plus incumbent mutations (sd 10% of each scaled range);
/// returns the decoded candidate with largest EI, earliest index on ties.
PipelineConfig propose(const Surrogate& surrogate, const ConfigSpace& space, double best,
                       std::span<const double> incumbent, Rng& rng, std::size_t n_candidates = 1000);

}  // namespace axmc::mobo
