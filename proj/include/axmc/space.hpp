#pragma once

#include "axmc/gbt.hpp"
#include "axmc/rng.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace axmc {

/// A full pipeline configuration: booster settings, round count and threshold.
/// For full evaluations booster.max_rounds == nrounds; sub-evaluations keep the
/// trained horizon in booster.max_rounds and a smaller nrounds.
struct PipelineConfig {
    gbt::BoosterParams booster;
    int nrounds = 100;
    double thr = 0.5;

    void validate() const;
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

enum class Scale { linear, log };

struct Dimension {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    Scale scale = Scale::linear;
    bool integer = false;

    /// Bounds in the search coordinates (log2 for log dimensions).
    double scaled_lo() const;
    double scaled_hi() const;
};

/// The tuning space over PipelineConfig. Encoded vectors live in search
/// coordinates: log2 for log dimensions, integers as reals.
class ConfigSpace {
public:
    ConfigSpace();

    const std::vector<Dimension>& dims() const { return dims_; }
    std::size_t size() const { return dims_.size(); }

    std::vector<double> encode(const PipelineConfig& config) const;
    /// Clips to bounds and rounds integer dimensions. The booster seed is left at 0.
    PipelineConfig decode(std::span<const double> x) const;
    void clip(std::span<double> x) const;

    std::vector<double> sample_encoded(Rng& rng) const;
    PipelineConfig sample(Rng& rng) const { return decode(sample_encoded(rng)); }

private:
    std::vector<Dimension> dims_;
};

}  // namespace axmc
