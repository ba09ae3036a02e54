#pragma once

#include "axmc/data.hpp"
#include "axmc/gbt.hpp"
#include "axmc/rng.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace axmc::measures {

enum class MeasureId {
    mmce,
    f1_gap,
    tpr_gap,
    suff_gap,
    calib_gap,
    robustness,
    sparsity,
    interaction_strength,
    main_effect_complexity,
    inference_time,
};

std::string_view to_string(MeasureId id);
/// Throws Error(configuration) for unknown ids.
MeasureId measure_from_string(std::string_view id);

/// True when the measure needs the protected-group labels.
bool needs_groups(MeasureId id);

struct RobustnessConfig {
    double epsilon = 0.005;  // noise sd as a fraction of each feature's range
    std::uint64_t seed = 0;
    int repeats = 5;

    static constexpr double epsilon_min = 0.001, epsilon_max = 0.01;
    void validate() const;
};

struct MeasureSpec {
    MeasureId id = MeasureId::mmce;
    RobustnessConfig robustness;
    int ale_bins = 20;
    int calibration_bins = 10;
    double mec_tolerance = 0.95;
    int timing_repeats = 5;

    /// Accepts a bare id string or an object {"id", "epsilon", "seed", "repeats", ...}.
    static MeasureSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Comma-separated ids, e.g. "mmce,f1_gap".
std::vector<MeasureSpec> parse_measure_list(std::string_view ids);

inline constexpr std::size_t min_objectives = 2;
inline constexpr std::size_t max_objectives = 5;

/// Objective list checks: unique ids, 2..5 entries, groups present for fairness
/// measures, inference time only when allowed. Throws Error(configuration).
void validate_specs(std::span<const MeasureSpec> specs, bool has_groups, bool allow_inference_time = false);

/// Minimized objective values aligned with the session's measure list.
using MeasureVector = std::vector<double>;

/// A model, the rows it is scored on, their cached staged margins, and the
/// (threshold, rounds) knobs. Fixtures can supply margins without a model.
struct EvalContext {
    const gbt::BoostedModel* model = nullptr;
    const Dataset* data = nullptr;
    std::shared_ptr<const gbt::StagedMargins> margins;
    double thr = 0.5;
    std::size_t n = 1;

    static EvalContext make(const gbt::BoostedModel& model, const Dataset& data, double thr, std::size_t n);
    /// Single-round context over explicit margins; model-structure measures are unavailable.
    static EvalContext from_margins(const Dataset& data, std::vector<double> margins, double thr);

    EvalContext with(std::size_t rounds, double threshold) const;

    void validate() const;
    std::span<const double> current_margins() const { return margins->at(n); }
    std::vector<std::uint8_t> hard_labels() const;
};

inline bool hard_label(double margin, double thr) { return gbt::sigmoid(margin) >= thr; }

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Confusion table over rows with groups[i] == group (all rows when groups is empty).
Confusion confusion(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predicted,
                    std::span<const std::uint8_t> groups = {}, std::uint8_t group = 0);

double mmce(const EvalContext& ctx);

enum class FairnessKind { independence, sufficiency, f1 };

double fairness_gap(const EvalContext& ctx, std::span<const std::uint8_t> groups, FairnessKind kind);
double calibration_gap(const EvalContext& ctx, std::span<const std::uint8_t> groups, int bins = 10);

/// Copy of `data` with every non-indicator numeric cell perturbed by
/// N(0, (epsilon * column range)^2); missing cells stay missing.
Dataset perturb(const Dataset& data, double epsilon, Rng& rng);

double robustness_perturbation(const EvalContext& ctx, const RobustnessConfig& cfg);
double sparsity(const EvalContext& ctx);

/// Scalar prediction for one dense row (feature order = dataset columns).
using Predictor = std::function<double(std::span<const double>)>;

enum class PredictionScale { probability, margin };
Predictor model_predictor(const gbt::BoostedModel& model, std::size_t n, PredictionScale scale);

/// Accumulated local effect curve, piecewise linear between bin edges and
/// centered to zero mean over the non-missing data rows.
struct AleCurve {
    std::vector<double> edges;
    std::vector<double> values;

    /// Interpolated effect; clamped outside the edges, 0 for missing x.
    double operator()(double x) const;
};

AleCurve ale_curve(const Predictor& f, const Dataset& data, std::size_t feature, int bins);
AleCurve ale_curve(const gbt::BoostedModel& model, const Dataset& data, std::size_t feature, std::size_t n, int bins,
                   PredictionScale scale = PredictionScale::probability);

/// Smallest segment count whose greedy piecewise-linear fit explains `tolerance`
/// of the curve's variance over `xs`; 0 for a zero-variance curve.
int segments_needed(const AleCurve& curve, std::span<const double> xs, double tolerance);

double main_effect_complexity(const Predictor& f, const Dataset& data, int bins, double tolerance = 0.95);
double main_effect_complexity(const gbt::BoostedModel& model, const Dataset& data, std::size_t n, int bins,
                              double tolerance = 0.95);

double interaction_strength(const Predictor& f, const Dataset& data, int bins);
double interaction_strength(const gbt::BoostedModel& model, const Dataset& data, std::size_t n, int bins);

/// Median wall-clock milliseconds per 1000 rows to produce probabilities.
double inference_time(const EvalContext& ctx, int repeats);

MeasureVector evaluate_all(std::span<const MeasureSpec> specs, const EvalContext& ctx,
                           std::optional<std::span<const std::uint8_t>> groups);

/// Scores one trained model at many (rounds, threshold) pairs. Margin-derived
/// measures reuse the staged margins; round-dependent structural measures are
/// cached per round count; robustness reuses staged margins of the perturbed copies.
class Evaluator {
public:
    Evaluator(std::vector<MeasureSpec> specs, const gbt::BoostedModel& model, const Dataset& data);

    MeasureVector evaluate(std::size_t n, double thr);
    const EvalContext& context() const { return ctx_; }

private:
    double robustness_at(const MeasureSpec& spec, std::size_t n, double thr);

    std::vector<MeasureSpec> specs_;
    const gbt::BoostedModel& model_;
    const Dataset& data_;
    EvalContext ctx_;
    std::map<std::pair<std::size_t, MeasureId>, double> per_round_;
    std::vector<std::shared_ptr<const gbt::StagedMargins>> perturbed_;
};

}  // namespace axmc::measures
