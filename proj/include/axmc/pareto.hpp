#pragma once

#include "axmc/measures.hpp"
#include "axmc/space.hpp"

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace axmc::pareto {

using measures::MeasureVector;

enum class Provenance { full, sub };

std::string_view to_string(Provenance p);

struct EvalRecord {
    PipelineConfig config;
    MeasureVector measures;
    Provenance provenance = Provenance::full;
    std::optional<std::size_t> parent;  // archive index of the full record a sub-record came from
    std::size_t iteration = 0;          // 0 = initial design
    double wall_time = 0.0;             // seconds spent producing the record

    nlohmann::json to_json() const;
    static EvalRecord from_json(const nlohmann::json& j);

    /// Equality on everything except wall_time.
    bool same_evaluation(const EvalRecord& other) const;
};

/// a <= b componentwise with at least one strict inequality (minimization).
bool dominates(std::span<const double> a, std::span<const double> b);

/// Indices of non-dominated records, in input order; duplicates all retained.
std::vector<std::size_t> front_indices(std::span<const EvalRecord> records);
std::vector<EvalRecord> pareto_front(std::span<const EvalRecord> records);
/// Front for display: the first record of each distinct measure vector on the front.
std::vector<std::size_t> distinct_front_indices(std::span<const EvalRecord> records);

class Archive {
public:
    Archive() = default;
    explicit Archive(std::size_t k) : k_(k) {}

    std::size_t k() const { return k_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<EvalRecord>& records() const { return records_; }
    const EvalRecord& operator[](std::size_t i) const { return records_[i]; }

    /// Returns the new record's index. Checks arity and the parent invariant.
    std::size_t append(EvalRecord record);

    std::size_t full_count() const;
    /// Per-objective (min, max) over all records.
    std::pair<MeasureVector, MeasureVector> bounds() const;

    nlohmann::json to_json() const;
    static Archive from_json(const nlohmann::json& j);

    bool same_evaluations(const Archive& other) const;

private:
    std::size_t k_ = 0;
    std::vector<EvalRecord> records_;
};

/// Candidates that lie on the front of archive ∪ candidates; the archive is not modified.
std::vector<EvalRecord> filter_subevals(const Archive& archive, std::span<const EvalRecord> candidates);

}  // namespace axmc::pareto
