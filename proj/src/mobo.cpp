#include "axmc/mobo.hpp"

#include "axmc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace axmc::mobo {

WeightBox WeightBox::unit(std::size_t k) { return {std::vector<double>(k, 0.0), std::vector<double>(k, 1.0)}; }

WeightBox WeightBox::first(double lo, double hi) { return {{lo, 0.0}, {hi, 1.0}}; }

void WeightBox::validate() const {
    if (lower.size() != upper.size() || lower.empty())
        fail(ErrorCode::argument, "weight box needs matching, nonempty lower and upper bounds", "box");
    double sl = 0.0, su = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (!(lower[i] >= 0.0 && lower[i] <= upper[i] && upper[i] <= 1.0))
            fail(ErrorCode::argument,
                 "weight bounds for objective " + std::to_string(i + 1) + " must satisfy 0 <= l <= u <= 1", "box");
        sl += lower[i];
        su += upper[i];
    }
    constexpr double tol = 1e-12;
    if (sl > 1.0 + tol || su < 1.0 - tol)
        fail(ErrorCode::argument, "weight box does not intersect the simplex (sum of lower bounds " + std::to_string(sl) +
                                      ", sum of upper bounds " + std::to_string(su) + ")",
             "box");
}

bool WeightBox::contains(std::span<const double> w, double tol) const {
    if (w.size() != lower.size()) return false;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] < lower[i] - tol || w[i] > upper[i] + tol) return false;
    return true;
}

nlohmann::json WeightBox::to_json() const { return {{"lower", lower}, {"upper", upper}}; }

WeightBox WeightBox::from_json(const nlohmann::json& j, std::size_t k) {
    WeightBox box;
    try {
        if (j.is_object() && j.contains("w1") && k == 2) {
            const auto range = j.at("w1").get<std::vector<double>>();
            if (range.size() != 2) fail(ErrorCode::argument, "w1 must be [lo, hi]", "w1");
            box = first(range[0], range[1]);
        } else {
            box.lower = j.at("lower").get<std::vector<double>>();
            box.upper = j.at("upper").get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::argument, std::string("malformed weight box: ") + e.what(), "box");
    }
    if (box.k() != k)
        fail(ErrorCode::argument, "weight box has " + std::to_string(box.k()) + " objectives, session has " + std::to_string(k),
             "box");
    box.validate();
    return box;
}

std::vector<double> sample_weights(const WeightBox& box, Rng& rng) {
    box.validate();
    const std::size_t k = box.k();
    std::vector<std::size_t> free;
    double pinned = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (box.lower[i] == box.upper[i])
            pinned += box.lower[i];
        else
            free.push_back(i);
    }
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i)
        if (box.lower[i] == box.upper[i]) w[i] = box.lower[i];
    const double mass = std::max(0.0, 1.0 - pinned);
    if (free.empty()) return w;

    std::vector<double> cuts(free.size() - 1);
    for (int attempt = 0; attempt < max_weight_rejections; ++attempt) {
        // Sorted uniforms split [0, 1] into a uniform point of the simplex.
        for (auto& c : cuts) c = rng.uniform();
        std::ranges::sort(cuts);
        double prev = 0.0, used = 0.0;
        for (std::size_t j = 0; j + 1 < free.size(); ++j) {
            w[free[j]] = mass * (cuts[j] - prev);
            used += w[free[j]];
            prev = cuts[j];
        }
        w[free.back()] = std::max(0.0, mass - used);
        if (box.contains(w)) return w;
    }
    fail(ErrorCode::infeasible_box,
         "no weight vector inside the box after " + std::to_string(max_weight_rejections) + " draws", "box");
}

ScalarizerConfig ScalarizerConfig::from_archive(const pareto::Archive& archive, double rho) {
    if (!(rho > 0.0)) fail(ErrorCode::configuration, "rho must be positive", "rho");
    ScalarizerConfig cfg;
    cfg.rho = rho;
    std::tie(cfg.min, cfg.max) = archive.bounds();
    return cfg;
}

double scalarize(std::span<const double> y, std::span<const double> w, const ScalarizerConfig& cfg) {
    if (y.size() != w.size() || y.size() != cfg.min.size() || y.size() != cfg.max.size())
        fail(ErrorCode::argument, "scalarize: length mismatch");
    double worst = -std::numeric_limits<double>::infinity(), sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double range = cfg.max[i] - cfg.min[i];
        const double f = range > 0.0 ? std::clamp((y[i] - cfg.min[i]) / range, 0.0, 1.0) : 0.0;
        worst = std::max(worst, w[i] * f);
        sum += w[i] * f;
    }
    return worst + cfg.rho * sum;
}

nlohmann::json ForestParams::to_json() const {
    return {{"trees", trees}, {"min_leaf", min_leaf}, {"mtry", mtry}, {"seed", seed}};
}

ForestParams ForestParams::from_json(const nlohmann::json& j) {
    ForestParams p;
    p.trees = j.value("trees", p.trees);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    p.mtry = j.value("mtry", p.mtry);
    p.seed = j.value("seed", p.seed);
    return p;
}

Surrogate Surrogate::fit(std::span<const double> X, std::size_t dims, std::span<const double> y,
                         const ForestParams& params) {
    const std::size_t n = y.size();
    if (n < 4) fail(ErrorCode::insufficient_data, "surrogate needs at least 4 records, got " + std::to_string(n));
    if (dims == 0 || X.size() != n * dims) fail(ErrorCode::argument, "surrogate design matrix has wrong shape");
    if (params.trees < 1 || params.min_leaf < 1) fail(ErrorCode::configuration, "forest needs trees >= 1 and min_leaf >= 1");
    const std::size_t mtry =
        params.mtry > 0 ? std::min<std::size_t>(params.mtry, dims) : (dims + 2) / 3;
    const auto min_leaf = static_cast<std::size_t>(params.min_leaf);

    Surrogate s;
    s.dims_ = dims;
    Rng rng(params.seed);
    std::vector<std::size_t> features(dims);
    std::vector<std::pair<double, std::size_t>> order;

    for (int t = 0; t < params.trees; ++t) {
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = rng.below(n);

        Tree tree(1);
        struct Task {
            std::int32_t node;
            std::size_t begin, end;
        };
        std::vector<Task> stack{{0, 0, n}};
        while (!stack.empty()) {
            const auto task = stack.back();
            stack.pop_back();
            const std::size_t count = task.end - task.begin;
            double total = 0.0;
            bool constant = true;
            for (std::size_t i = task.begin; i < task.end; ++i) {
                total += y[rows[i]];
                constant = constant && y[rows[i]] == y[rows[task.begin]];
            }
            tree[task.node].value = total / static_cast<double>(count);
            if (constant || count < 2 * min_leaf) continue;

            std::iota(features.begin(), features.end(), std::size_t{0});
            for (std::size_t i = 0; i < mtry; ++i) std::swap(features[i], features[i + rng.below(dims - i)]);

            // Maximize sL^2/nL + sR^2/nR, i.e. minimize the children's squared error.
            double best_score = total * total / static_cast<double>(count);
            std::int32_t best_feature = -1;
            double best_threshold = 0.0;
            for (std::size_t fi = 0; fi < mtry; ++fi) {
                const std::size_t f = features[fi];
                order.clear();
                for (std::size_t i = task.begin; i < task.end; ++i) order.emplace_back(X[rows[i] * dims + f], rows[i]);
                std::ranges::sort(order);
                double left = 0.0;
                for (std::size_t i = 0; i + 1 < count; ++i) {
                    left += y[order[i].second];
                    const std::size_t nl = i + 1, nr = count - nl;
                    if (nl < min_leaf) continue;
                    if (nr < min_leaf) break;
                    if (!(order[i + 1].first > order[i].first)) continue;
                    const double right = total - left;
                    const double score =
                        left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr);
                    if (score > best_score * (1.0 + 1e-12) + 1e-300) {
                        best_score = score;
                        best_feature = static_cast<std::int32_t>(f);
                        best_threshold = order[i].first + (order[i + 1].first - order[i].first) * 0.5;
                        if (!(best_threshold < order[i + 1].first)) best_threshold = order[i].first;
                    }
                }
            }
            if (best_feature < 0) continue;

            const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(task.begin),
                                            rows.begin() + static_cast<std::ptrdiff_t>(task.end), [&](std::size_t r) {
                                                return X[r * dims + static_cast<std::size_t>(best_feature)] <= best_threshold;
                                            });
            const auto split = static_cast<std::size_t>(mid - rows.begin());
            const auto l = static_cast<std::int32_t>(tree.size());
            tree.emplace_back();
            tree.emplace_back();
            auto& node = tree[task.node];
            node.feature = best_feature;
            node.threshold = best_threshold;
            node.left = l;
            node.right = l + 1;
            stack.push_back({l + 1, split, task.end});
            stack.push_back({l, task.begin, split});
        }
        s.trees_.push_back(std::move(tree));
    }
    return s;
}

double Surrogate::eval(const Tree& tree, std::span<const double> x) {
    std::int32_t i = 0;
    while (tree[i].feature >= 0) i = x[tree[i].feature] <= tree[i].threshold ? tree[i].left : tree[i].right;
    return tree[i].value;
}

std::vector<double> Surrogate::tree_predictions(std::span<const double> x) const {
    if (x.size() != dims_) fail(ErrorCode::argument, "surrogate input has wrong dimension");
    std::vector<double> out;
    out.reserve(trees_.size());
    for (const auto& t : trees_) out.push_back(eval(t, x));
    return out;
}

Surrogate::Prediction Surrogate::predict(std::span<const double> x) const {
    const auto preds = tree_predictions(x);
    const double mean = std::accumulate(preds.begin(), preds.end(), 0.0) / static_cast<double>(preds.size());
    double var = 0.0;
    for (double p : preds) var += (p - mean) * (p - mean);
    return {mean, std::sqrt(var / static_cast<double>(preds.size()))};
}

Surrogate fit_surrogate(const pareto::Archive& archive, std::span<const double> w, const ScalarizerConfig& cfg,
                        const ConfigSpace& space, const ForestParams& params) {
    if (archive.size() < 4)
        fail(ErrorCode::insufficient_data, "surrogate needs at least 4 records, archive has " + std::to_string(archive.size()));
    std::vector<double> X, y;
    X.reserve(archive.size() * space.size());
    for (const auto& r : archive.records()) {
        const auto x = space.encode(r.config);
        X.insert(X.end(), x.begin(), x.end());
        y.push_back(scalarize(r.measures, w, cfg));
    }
    return Surrogate::fit(X, space.size(), y, params);
}

double expected_improvement(double mu, double sd, double best) {
    const double diff = best - mu;
    if (!(sd > 0.0)) return std::max(diff, 0.0);
    const double z = diff / sd;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    return std::max(0.0, diff * cdf + sd * pdf);
}

PipelineConfig propose(const Surrogate& surrogate, const ConfigSpace& space, double best,
                       std::span<const double> incumbent, Rng& rng, std::size_t n_candidates) {
    if (n_candidates < 1) fail(ErrorCode::configuration, "n_candidates must be at least 1", "n_candidates");
    if (incumbent.size() != space.size()) fail(ErrorCode::argument, "incumbent has wrong dimension");
    std::vector<std::vector<double>> candidates;
    candidates.reserve(n_candidates + incumbent_mutations);
    for (std::size_t i = 0; i < n_candidates; ++i) candidates.push_back(space.sample_encoded(rng));
    for (int i = 0; i < incumbent_mutations; ++i) {
        std::vector<double> x(incumbent.begin(), incumbent.end());
        for (std::size_t d = 0; d < x.size(); ++d) {
            const auto& dim = space.dims()[d];
            x[d] += 0.1 * (dim.scaled_hi() - dim.scaled_lo()) * rng.normal();
        }
        space.clip(x);
        candidates.push_back(std::move(x));
    }
    std::size_t chosen = 0;
    double chosen_ei = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto p = surrogate.predict(candidates[i]);
        const double ei = expected_improvement(p.mean, p.sd, best);
        if (ei > chosen_ei) {
            chosen_ei = ei;
            chosen = i;
        }
    }
    return space.decode(candidates[chosen]);
}

}  // namespace axmc::mobo
