#pragma once

#include "axmc/data.hpp"
#include "axmc/measures.hpp"
#include "axmc/mobo.hpp"
#include "axmc/pareto.hpp"
#include "axmc/rng.hpp"
#include "axmc/space.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace axmc::engine {

inline constexpr std::string_view snapshot_format = "axmc-session-v1";

enum class Status { idle, running, paused, done };
std::string_view to_string(Status s);

/// Everything needed to rebuild a session from scratch. The dataset travels as
/// CSV text so snapshots are self-contained.
struct SessionConfig {
    Schema schema;
    std::string csv;
    SplitSpec split;
    std::vector<measures::MeasureSpec> measures;
    std::uint64_t seed = 1;
    std::size_t m = 0;                    // initial design size; 0 = max(8, 4 + 2k)
    std::optional<std::size_t> budget;    // initial iteration allowance; unset = granted by run requests
    double rho = 0.05;
    std::size_t n_candidates = 1000;
    mobo::ForestParams forest;            // seed is drawn per iteration
    bool allow_inference_time = false;
    std::optional<mobo::WeightBox> box;   // default [0, 1]^k

    std::size_t initial_design_size() const;
    nlohmann::json to_json() const;
    static SessionConfig from_json(const nlohmann::json& j);
};

struct Budget {
    std::size_t iterations_done = 0;
    std::optional<std::size_t> iterations_allowed = 0;  // unset: no iteration cap (time-limited run)
    std::optional<double> seconds_allowed;               // cumulative wall-clock cap
    double seconds_used = 0.0;

    bool exhausted() const;
    nlohmann::json to_json() const;
    static Budget from_json(const nlohmann::json& j);
};

struct SessionData {
    Dataset train, valid, test;
};

/// Loads, encodes and splits the session's dataset.
std::shared_ptr<const SessionData> load_data(const SessionConfig& config);

struct SessionState {
    std::string id;
    SessionConfig config;
    std::shared_ptr<const SessionData> data;
    pareto::Archive archive;
    mobo::WeightBox box;
    Rng rng;
    Budget budget;
    Status status = Status::idle;
    std::size_t m = 0;

    std::size_t k() const { return config.measures.size(); }
};

/// Callbacks fired by the optimizer loop. All are optional.
struct Hooks {
    std::function<void(const pareto::EvalRecord&, std::size_t index)> on_record;
    std::function<void(const SessionState&)> after_iteration;
    const std::atomic<bool>* pause = nullptr;
};

SessionState init_session(SessionConfig config, std::string id = "session", const Hooks& hooks = {});

/// One optimizer step. Requires status running and remaining budget.
void run_iteration(SessionState& state, const Hooks& hooks = {});

struct RunRequest {
    std::optional<std::size_t> iterations;  // grants this many more iterations
    std::optional<double> seconds;          // wall-clock allowance for this run
};

/// Loops until the budget is exhausted (status done) or a pause is requested
/// (status paused). Requires status idle, paused, or done with new budget.
void run(SessionState& state, const RunRequest& request = {}, const Hooks& hooks = {});

/// Replaces the weight box. Rejected with a status error while running.
void set_weight_box(SessionState& state, mobo::WeightBox box);

/// n values for the sub-evaluation grid: ceil of 25/50/75/90 % of nrounds plus nrounds, deduplicated.
std::vector<int> subevaluation_rounds(int nrounds);
inline constexpr int threshold_steps = 10;  // thresholds k / 10, k = 0..10

/// Candidate (n, thr) pairs, excluding the full evaluation's own pair.
std::vector<std::pair<int, double>> subevaluation_grid(const PipelineConfig& config);

/// Sub-records for a trained model, scored from staged margins on `valid`.
/// Parent and iteration are left for the caller.
std::vector<pareto::EvalRecord> subevaluations(const gbt::BoostedModel& model, const PipelineConfig& config,
                                               std::span<const measures::MeasureSpec> specs, const Dataset& valid);
std::vector<pareto::EvalRecord> subevaluations(measures::Evaluator& evaluator, const PipelineConfig& config);

std::string snapshot(const SessionState& state);
/// Throws Error(restore) on a version mismatch or a corrupt document.
SessionState restore(std::string_view text);

enum class Split { valid, test };
Split split_from_string(std::string_view s);

struct FrontRow {
    std::size_t index = 0;  // archive index
    PipelineConfig config;
    measures::MeasureVector measures;
    pareto::Provenance provenance = pareto::Provenance::full;
};

struct FrontTable {
    Split split = Split::valid;
    std::vector<std::string> measure_ids;
    std::vector<FrontRow> rows;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Validation front, or its configurations re-scored on the test split.
/// Rows are sorted by the first measure ascending.
FrontTable report(const SessionState& state, Split split);

struct PathPoint {
    std::size_t index = 0;
    std::size_t iteration = 0;
    measures::MeasureVector values;
    measures::MeasureVector best;  // running minimum per measure
};

/// Per-full-evaluation values and their best-so-far, in archive order.
std::vector<PathPoint> optimization_path(const SessionState& state);
nlohmann::json path_to_json(const SessionState& state);

nlohmann::json status_json(const SessionState& state);

}  // namespace axmc::engine
