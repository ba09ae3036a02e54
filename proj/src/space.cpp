#include "axmc/space.hpp"

#include "axmc/error.hpp"

#include <algorithm>
#include <cmath>

namespace axmc {

namespace {

enum Dim : std::size_t { eta, max_depth, min_child_weight, subsample, colsample, lambda, gamma, nrounds, thr };

}  // namespace

void PipelineConfig::validate() const {
    booster.validate();
    if (nrounds < gbt::BoosterParams::rounds_min || nrounds > booster.max_rounds)
        fail(ErrorCode::argument, "nrounds must lie in [10, max_rounds]", "nrounds");
    if (!(thr >= 0.0 && thr <= 1.0)) fail(ErrorCode::argument, "threshold must lie in [0, 1]", "thr");
}

nlohmann::json PipelineConfig::to_json() const {
    return {{"booster", booster.to_json()}, {"nrounds", nrounds}, {"thr", thr}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.booster = gbt::BoosterParams::from_json(j.at("booster"));
    c.nrounds = j.at("nrounds").get<int>();
    c.thr = j.at("thr").get<double>();
    return c;
}

double Dimension::scaled_lo() const { return scale == Scale::log ? std::log2(lo) : lo; }
double Dimension::scaled_hi() const { return scale == Scale::log ? std::log2(hi) : hi; }

ConfigSpace::ConfigSpace() {
    using P = gbt::BoosterParams;
    dims_ = {
        {"eta", P::eta_min, P::eta_max, Scale::linear, false},
        {"max_depth", P::depth_min, P::depth_max, Scale::linear, true},
        {"min_child_weight", P::mcw_min, P::mcw_max, Scale::log, false},
        {"subsample", P::subsample_min, P::subsample_max, Scale::linear, false},
        {"colsample", P::colsample_min, P::colsample_max, Scale::linear, false},
        {"lambda", P::lambda_min, P::lambda_max, Scale::log, false},
        {"gamma", P::gamma_min, P::gamma_max, Scale::log, false},
        {"nrounds", P::rounds_min, P::rounds_max, Scale::linear, true},
        {"thr", 0.0, 1.0, Scale::linear, false},
    };
}

std::vector<double> ConfigSpace::encode(const PipelineConfig& c) const {
    const auto& b = c.booster;
    return {b.eta,
            static_cast<double>(b.max_depth),
            std::log2(b.min_child_weight),
            b.subsample,
            b.colsample,
            std::log2(b.lambda),
            std::log2(b.gamma),
            static_cast<double>(c.nrounds),
            c.thr};
}

void ConfigSpace::clip(std::span<double> x) const {
    if (x.size() != dims_.size()) fail(ErrorCode::argument, "encoded config has wrong dimension");
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& d = dims_[i];
        double v = std::clamp(x[i], d.scaled_lo(), d.scaled_hi());
        if (d.integer) v = std::clamp(std::round(v), d.lo, d.hi);
        x[i] = v;
    }
}

PipelineConfig ConfigSpace::decode(std::span<const double> x) const {
    std::vector<double> v(x.begin(), x.end());
    clip(v);
    // exp2 of a clipped log2 value can drift one ulp past the bound.
    auto unlog = [&](std::size_t i) { return std::clamp(std::exp2(v[i]), dims_[i].lo, dims_[i].hi); };
    PipelineConfig c;
    c.booster.eta = v[eta];
    c.booster.max_depth = static_cast<int>(v[max_depth]);
    c.booster.min_child_weight = unlog(min_child_weight);
    c.booster.subsample = v[subsample];
    c.booster.colsample = v[colsample];
    c.booster.lambda = unlog(lambda);
    c.booster.gamma = unlog(gamma);
    c.nrounds = static_cast<int>(v[nrounds]);
    c.booster.max_rounds = c.nrounds;
    c.booster.seed = 0;
    c.thr = v[thr];
    return c;
}

std::vector<double> ConfigSpace::sample_encoded(Rng& rng) const {
    std::vector<double> x(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const auto& d = dims_[i];
        if (d.integer)
            x[i] = d.lo + static_cast<double>(rng.below(static_cast<std::uint64_t>(d.hi - d.lo) + 1));
        else
            x[i] = rng.uniform(d.scaled_lo(), d.scaled_hi());
    }
    return x;
}

}  // namespace axmc
