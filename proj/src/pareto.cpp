#include "axmc/pareto.hpp"

#include "axmc/error.hpp"

#include <algorithm>
#include <limits>

namespace axmc::pareto {

std::string_view to_string(Provenance p) { return p == Provenance::full ? "full" : "sub"; }

nlohmann::json EvalRecord::to_json() const {
    nlohmann::json j{{"config", config.to_json()},
                     {"measures", measures},
                     {"provenance", to_string(provenance)},
                     {"iteration", iteration},
                     {"wall_time", wall_time}};
    j["parent"] = parent ? nlohmann::json(*parent) : nlohmann::json(nullptr);
    return j;
}

EvalRecord EvalRecord::from_json(const nlohmann::json& j) {
    EvalRecord r;
    r.config = PipelineConfig::from_json(j.at("config"));
    r.measures = j.at("measures").get<MeasureVector>();
    const auto prov = j.at("provenance").get<std::string>();
    if (prov == "full")
        r.provenance = Provenance::full;
    else if (prov == "sub")
        r.provenance = Provenance::sub;
    else
        fail(ErrorCode::parse, "unknown provenance '" + prov + "'", "provenance");
    if (!j.at("parent").is_null()) r.parent = j.at("parent").get<std::size_t>();
    r.iteration = j.at("iteration").get<std::size_t>();
    r.wall_time = j.at("wall_time").get<double>();
    return r;
}

bool EvalRecord::same_evaluation(const EvalRecord& o) const {
    return config == o.config && measures == o.measures && provenance == o.provenance && parent == o.parent &&
           iteration == o.iteration;
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        fail(ErrorCode::argument, "measure vectors differ in length (" + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()) + ")");
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> front_indices(std::span<const EvalRecord> records) {
    if (records.empty()) fail(ErrorCode::argument, "pareto front of an empty record list");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < records.size() && !dominated; ++j)
            dominated = j != i && dominates(records[j].measures, records[i].measures);
        if (!dominated) out.push_back(i);
    }
    return out;
}

std::vector<EvalRecord> pareto_front(std::span<const EvalRecord> records) {
    std::vector<EvalRecord> out;
    for (auto i : front_indices(records)) out.push_back(records[i]);
    return out;
}

std::vector<std::size_t> distinct_front_indices(std::span<const EvalRecord> records) {
    std::vector<std::size_t> out;
    for (auto i : front_indices(records))
        if (std::ranges::none_of(out, [&](std::size_t j) { return records[j].measures == records[i].measures; }))
            out.push_back(i);
    return out;
}

std::size_t Archive::append(EvalRecord record) {
    if (record.measures.size() != k_)
        fail(ErrorCode::argument, "record has " + std::to_string(record.measures.size()) + " measures, archive expects " +
                                      std::to_string(k_));
    if (record.provenance == Provenance::sub) {
        if (!record.parent || *record.parent >= records_.size() ||
            records_[*record.parent].provenance != Provenance::full)
            fail(ErrorCode::argument, "sub-record must reference an existing full record", "parent");
    } else if (record.parent) {
        fail(ErrorCode::argument, "full record cannot carry a parent", "parent");
    }
    records_.push_back(std::move(record));
    return records_.size() - 1;
}

std::size_t Archive::full_count() const {
    return static_cast<std::size_t>(
        std::ranges::count_if(records_, [](const EvalRecord& r) { return r.provenance == Provenance::full; }));
}

std::pair<MeasureVector, MeasureVector> Archive::bounds() const {
    MeasureVector lo(k_, std::numeric_limits<double>::infinity());
    MeasureVector hi(k_, -std::numeric_limits<double>::infinity());
    for (const auto& r : records_)
        for (std::size_t i = 0; i < k_; ++i) {
            lo[i] = std::min(lo[i], r.measures[i]);
            hi[i] = std::max(hi[i], r.measures[i]);
        }
    return {lo, hi};
}

nlohmann::json Archive::to_json() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records_) recs.push_back(r.to_json());
    return {{"k", k_}, {"records", std::move(recs)}};
}

Archive Archive::from_json(const nlohmann::json& j) {
    Archive a(j.at("k").get<std::size_t>());
    for (const auto& r : j.at("records")) a.append(EvalRecord::from_json(r));
    return a;
}

bool Archive::same_evaluations(const Archive& other) const {
    if (k_ != other.k_ || records_.size() != other.records_.size()) return false;
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (!records_[i].same_evaluation(other.records_[i])) return false;
    return true;
}

std::vector<EvalRecord> filter_subevals(const Archive& archive, std::span<const EvalRecord> candidates) {
    for (const auto& c : candidates)
        if (c.provenance != Provenance::sub) fail(ErrorCode::argument, "filter_subevals expects sub-records only");
    // A candidate is on the union's front iff nothing in the union dominates it.
    std::vector<EvalRecord> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& y = candidates[i].measures;
        bool dominated = std::ranges::any_of(archive.records(), [&](const EvalRecord& r) { return dominates(r.measures, y); });
        for (std::size_t j = 0; j < candidates.size() && !dominated; ++j)
            dominated = j != i && dominates(candidates[j].measures, y);
        if (!dominated) out.push_back(candidates[i]);
    }
    return out;
}

}  // namespace axmc::pareto
