#include "axmc/gbt.hpp"

#include "axmc/error.hpp"
#include "axmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace axmc::gbt {

namespace {

void check_bound(double value, double lo, double hi, const char* name) {
    if (!(value >= lo && value <= hi))
        fail(ErrorCode::argument,
             std::string("booster parameter ") + name + "=" + std::to_string(value) + " outside [" +
                 std::to_string(lo) + ", " + std::to_string(hi) + "]",
             name);
}

void check_rounds(const BoostedModel& model, std::size_t n) {
    if (n < 1 || n > model.rounds_trained())
        fail(ErrorCode::argument, "round count " + std::to_string(n) + " outside [1, " +
                                      std::to_string(model.rounds_trained()) + "]",
             "n");
}

void check_layout(const BoostedModel& model, const Dataset& rows) {
    if (!rows.all_numeric()) fail(ErrorCode::argument, "prediction requires one-hot encoded data");
    if (rows.features() != model.feature_map().columns.size())
        fail(ErrorCode::argument, "dataset has " + std::to_string(rows.features()) + " columns, model expects " +
                                      std::to_string(model.feature_map().columns.size()));
}

double gain_term(double g, double h, double lambda) { return g * g / (h + lambda); }

struct Candidate {
    double gain = 0.0;
    double threshold = 0.0;
    bool default_left = true;
    bool valid = false;
};

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
};

// One tree, grown level by level. Each level scans every sampled feature once
// over its presorted rows, accumulating left sums per frontier node.
class TreeGrower {
public:
    TreeGrower(const Dataset& data, const std::vector<std::vector<std::uint32_t>>& sorted,
               const std::vector<bool>& has_missing, const BoosterParams& params, unsigned threads)
        : data_(data), sorted_(sorted), has_missing_(has_missing), params_(params), threads_(threads) {}

    Tree grow(std::span<const double> grad, std::span<const double> hess, std::span<const std::uint32_t> rows,
              std::span<const std::size_t> features) {
        const std::size_t n = data_.rows();
        node_of_row_.assign(n, -1);
        for (auto r : rows) node_of_row_[r] = 0;

        Tree tree;
        tree.nodes.emplace_back();
        std::vector<NodeStats> stats(1);
        for (auto r : rows) {
            stats[0].g += grad[r];
            stats[0].h += hess[r];
        }

        // Per-feature row lists restricted to rows still inside growing nodes.
        std::vector<std::vector<std::uint32_t>> lists(features.size());
        for (std::size_t k = 0; k < features.size(); ++k) {
            const auto& all = sorted_[features[k]];
            lists[k].reserve(rows.size());
            for (auto r : all)
                if (node_of_row_[r] >= 0) lists[k].push_back(r);
        }

        std::vector<std::int32_t> frontier{0};
        for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
            slot_of_node_.assign(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < frontier.size(); ++s) slot_of_node_[frontier[s]] = static_cast<std::int32_t>(s);

            std::vector<std::vector<Candidate>> best(features.size());
            auto scan = [&](std::size_t k) {
                best[k] = scan_feature(features[k], lists[k], frontier, stats, grad, hess);
            };
            if (threads_ > 1 && features.size() > 1) {
                std::vector<std::thread> pool;
                const unsigned workers = std::min<unsigned>(threads_, static_cast<unsigned>(features.size()));
                for (unsigned t = 0; t < workers; ++t)
                    pool.emplace_back([&, t] {
                        for (std::size_t k = t; k < features.size(); k += workers) scan(k);
                    });
                for (auto& th : pool) th.join();
            } else {
                for (std::size_t k = 0; k < features.size(); ++k) scan(k);
            }

            // Reduce in feature order; strict comparison keeps the earliest feature on ties.
            std::vector<std::int32_t> next;
            std::vector<std::size_t> chosen_feature(frontier.size(), 0);
            std::vector<Candidate> chosen(frontier.size());
            for (std::size_t s = 0; s < frontier.size(); ++s) {
                for (std::size_t k = 0; k < features.size(); ++k) {
                    const auto& c = best[k][s];
                    if (c.valid && (!chosen[s].valid || c.gain > chosen[s].gain)) {
                        chosen[s] = c;
                        chosen_feature[s] = features[k];
                    }
                }
            }
            for (std::size_t s = 0; s < frontier.size(); ++s) {
                if (!chosen[s].valid) continue;
                const auto id = frontier[s];
                const auto left = static_cast<std::int32_t>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                stats.resize(tree.nodes.size());
                auto& node = tree.nodes[id];
                node.feature = static_cast<std::int32_t>(chosen_feature[s]);
                node.threshold = chosen[s].threshold;
                node.default_left = chosen[s].default_left;
                node.left = left;
                node.right = left + 1;
                next.push_back(left);
                next.push_back(left + 1);
            }

            // Route rows of split nodes to their children; rows in unsplit nodes finish.
            for (auto r : rows) {
                const auto id = node_of_row_[r];
                if (id < 0 || slot_of_node_[id] < 0) continue;
                const auto& node = tree.nodes[id];
                if (node.is_leaf()) {
                    node_of_row_[r] = -1;
                    continue;
                }
                const double x = data_.at(r, static_cast<std::size_t>(node.feature));
                const bool go_left = std::isnan(x) ? node.default_left : x < node.threshold;
                const auto child = go_left ? node.left : node.right;
                node_of_row_[r] = child;
                stats[child].g += grad[r];
                stats[child].h += hess[r];
            }
            for (std::size_t s = 0; s < frontier.size(); ++s)
                if (tree.nodes[frontier[s]].is_leaf()) set_leaf(tree.nodes[frontier[s]], stats[frontier[s]]);
            if (next.empty()) {
                frontier.clear();
                break;
            }
            for (auto& list : lists)
                std::erase_if(list, [&](std::uint32_t r) { return node_of_row_[r] < 0; });
            frontier = std::move(next);
        }
        for (auto id : frontier) set_leaf(tree.nodes[id], stats[id]);
        return tree;
    }

private:
    void set_leaf(TreeNode& node, const NodeStats& s) const {
        node.feature = -1;
        node.value = -s.g / (s.h + params_.lambda) * params_.eta;
    }

    std::vector<Candidate> scan_feature(std::size_t f, const std::vector<std::uint32_t>& list,
                                        const std::vector<std::int32_t>& frontier, const std::vector<NodeStats>& stats,
                                        std::span<const double> grad, std::span<const double> hess) const {
        const std::size_t m = frontier.size();
        std::vector<Candidate> best(m);
        std::vector<NodeStats> missing(m);
        if (has_missing_[f]) {
            // Missing sums = node total minus non-missing sums.
            std::vector<NodeStats> present(m);
            for (auto r : list) {
                const auto s = slot_of_node_[node_of_row_[r]];
                present[s].g += grad[r];
                present[s].h += hess[r];
            }
            for (std::size_t s = 0; s < m; ++s) {
                missing[s].g = stats[frontier[s]].g - present[s].g;
                missing[s].h = stats[frontier[s]].h - present[s].h;
            }
        }

        std::vector<NodeStats> left(m);
        std::vector<double> last(m, 0.0);
        std::vector<double> parent(m);
        for (std::size_t s = 0; s < m; ++s)
            parent[s] = gain_term(stats[frontier[s]].g, stats[frontier[s]].h, params_.lambda);
        const auto& column = data_.columns[f].values;
        const auto* slot = slot_of_node_.data();
        const auto* node = node_of_row_.data();
        for (auto r : list) {
            const auto s = static_cast<std::size_t>(slot[node[r]]);
            const double v = column[r];
            // left.h > 0 marks that the node has already seen a row (hessians are positive).
            if (left[s].h > 0.0 && v > last[s])
                consider(best[s], stats[frontier[s]], parent[s], left[s], missing[s], last[s], v);
            left[s].g += grad[r];
            left[s].h += hess[r];
            last[s] = v;
        }
        return best;
    }

    void consider(Candidate& best, const NodeStats& total, double parent, const NodeStats& left,
                  const NodeStats& missing, double lo, double hi) const {
        const double lambda = params_.lambda, mcw = params_.min_child_weight;
        bool improved = false;
        auto evaluate = [&](double gl, double hl, bool default_left) {
            const double hr = total.h - hl;
            if (hl < mcw || hr < mcw) return;
            const double gr = total.g - gl;
            const double gain = 0.5 * (gain_term(gl, hl, lambda) + gain_term(gr, hr, lambda) - parent) - params_.gamma;
            if (gain > 0.0 && (!best.valid || gain > best.gain)) {
                best.gain = gain;
                best.default_left = default_left;
                best.valid = true;
                improved = true;
            }
        };
        if (missing.h > 0.0) {
            evaluate(left.g, left.h, false);
            evaluate(left.g + missing.g, left.h + missing.h, true);
        } else {
            // No missing rows here: send future missing values to the heavier child.
            evaluate(left.g, left.h, left.h >= total.h - left.h);
        }
        if (improved) {
            double thr = lo + (hi - lo) * 0.5;
            if (!(thr > lo)) thr = hi;
            best.threshold = thr;
        }
    }

    const Dataset& data_;
    const std::vector<std::vector<std::uint32_t>>& sorted_;
    const std::vector<bool>& has_missing_;
    const BoosterParams& params_;
    unsigned threads_;
    std::vector<std::int32_t> node_of_row_;
    std::vector<std::int32_t> slot_of_node_;
};

}  // namespace

void BoosterParams::validate() const {
    check_bound(eta, eta_min, eta_max, "eta");
    check_bound(max_depth, depth_min, depth_max, "max_depth");
    check_bound(min_child_weight, mcw_min, mcw_max, "min_child_weight");
    check_bound(subsample, subsample_min, subsample_max, "subsample");
    check_bound(colsample, colsample_min, colsample_max, "colsample");
    check_bound(lambda, lambda_min, lambda_max, "lambda");
    check_bound(gamma, gamma_min, gamma_max, "gamma");
    check_bound(max_rounds, rounds_min, rounds_max, "max_rounds");
}

nlohmann::json BoosterParams::to_json() const {
    return {{"eta", eta},           {"max_depth", max_depth}, {"min_child_weight", min_child_weight},
            {"subsample", subsample}, {"colsample", colsample}, {"lambda", lambda},
            {"gamma", gamma},       {"max_rounds", max_rounds}, {"seed", seed}};
}

BoosterParams BoosterParams::from_json(const nlohmann::json& j) {
    BoosterParams p;
    p.eta = j.at("eta").get<double>();
    p.max_depth = j.at("max_depth").get<int>();
    p.min_child_weight = j.at("min_child_weight").get<double>();
    p.subsample = j.at("subsample").get<double>();
    p.colsample = j.at("colsample").get<double>();
    p.lambda = j.at("lambda").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.max_rounds = j.at("max_rounds").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

FeatureMap FeatureMap::of(const Dataset& data) {
    FeatureMap map;
    map.sources = data.sources;
    for (const auto& c : data.columns) {
        map.columns.push_back(c.name);
        map.source_of.push_back(c.source);
    }
    return map;
}

std::size_t Tree::split_count() const {
    return static_cast<std::size_t>(std::ranges::count_if(nodes, [](const TreeNode& n) { return !n.is_leaf(); }));
}

std::span<const double> StagedMargins::at(std::size_t n) const {
    if (n < 1 || n > rounds_)
        fail(ErrorCode::argument, "round count " + std::to_string(n) + " outside [1, " + std::to_string(rounds_) + "]",
             "n");
    return {values_.data() + (n - 1) * rows_, rows_};
}

double BoostedModel::margin_row(std::span<const double> row, std::size_t n) const {
    double m = base_score_;
    for (std::size_t t = 0; t < n; ++t) m += trees_[t].leaf_value([&](std::int32_t f) { return row[f]; });
    return m;
}

void BoostedModel::rebuild_usage() {
    feature_usage_.assign(trees_.size(), std::vector<std::uint32_t>(feature_map_.sources.size(), 0));
    for (std::size_t t = 0; t < trees_.size(); ++t)
        for (const auto& node : trees_[t].nodes)
            if (!node.is_leaf()) ++feature_usage_[t][feature_map_.source_of[node.feature]];
}

BoostedModel BoostedModel::from_trees(double base_score, std::vector<Tree> trees, FeatureMap map,
                                      BoosterParams params) {
    BoostedModel m;
    m.base_score_ = base_score;
    m.trees_ = std::move(trees);
    m.feature_map_ = std::move(map);
    m.params_ = params;
    for (const auto& tree : m.trees_)
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) {
                if (!std::isfinite(node.value)) fail(ErrorCode::argument, "non-finite leaf weight");
            } else if (static_cast<std::size_t>(node.feature) >= m.feature_map_.columns.size() || node.left < 0 ||
                       node.right < 0 || static_cast<std::size_t>(std::max(node.left, node.right)) >= tree.nodes.size()) {
                fail(ErrorCode::argument, "malformed tree node");
            }
        }
    m.rebuild_usage();
    return m;
}

nlohmann::json BoostedModel::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : trees_) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            if (n.is_leaf())
                nodes.push_back({{"v", n.value}});
            else
                nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"d", n.default_left}, {"l", n.left}, {"r", n.right}});
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    return {{"base_score", base_score_},
            {"trees", std::move(trees)},
            {"params", params_.to_json()},
            {"feature_map",
             {{"columns", feature_map_.columns}, {"source_of", feature_map_.source_of}, {"sources", feature_map_.sources}}}};
}

BoostedModel BoostedModel::from_json(const nlohmann::json& j) {
    try {
        FeatureMap map;
        const auto& fm = j.at("feature_map");
        map.columns = fm.at("columns").get<std::vector<std::string>>();
        map.source_of = fm.at("source_of").get<std::vector<std::size_t>>();
        map.sources = fm.at("sources").get<std::vector<std::string>>();
        std::vector<Tree> trees;
        for (const auto& jt : j.at("trees")) {
            Tree tree;
            for (const auto& jn : jt.at("nodes")) {
                TreeNode n;
                if (jn.contains("f")) {
                    n.feature = jn.at("f").get<std::int32_t>();
                    n.threshold = jn.at("t").get<double>();
                    n.default_left = jn.at("d").get<bool>();
                    n.left = jn.at("l").get<std::int32_t>();
                    n.right = jn.at("r").get<std::int32_t>();
                } else {
                    n.value = jn.at("v").get<double>();
                }
                tree.nodes.push_back(n);
            }
            trees.push_back(std::move(tree));
        }
        return from_trees(j.at("base_score").get<double>(), std::move(trees), std::move(map),
                          BoosterParams::from_json(j.at("params")));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed model JSON: ") + e.what());
    }
}

BoostedModel train(const Dataset& data, const BoosterParams& params, unsigned threads) {
    params.validate();
    const std::size_t n = data.rows();
    if (n == 0) fail(ErrorCode::input, "training data is empty");
    if (!data.all_numeric()) fail(ErrorCode::argument, "training requires one-hot encoded data");
    const auto positives = static_cast<std::size_t>(std::ranges::count(data.labels, std::uint8_t{1}));
    if (positives == 0 || positives == n) fail(ErrorCode::degenerate_target, "training labels contain a single class");

    const std::size_t p = data.features();
    std::vector<std::vector<std::uint32_t>> sorted(p);
    std::vector<bool> has_missing(p, false);
    for (std::size_t f = 0; f < p; ++f) {
        const auto& col = data.columns[f].values;
        for (std::size_t r = 0; r < n; ++r) {
            if (std::isnan(col[r]))
                has_missing[f] = true;
            else
                sorted[f].push_back(static_cast<std::uint32_t>(r));
        }
        std::ranges::stable_sort(sorted[f], [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }

    BoostedModel model;
    model.params_ = params;
    model.feature_map_ = FeatureMap::of(data);
    const double rate = static_cast<double>(positives) / static_cast<double>(n);
    model.base_score_ = std::log(rate / (1.0 - rate));

    Rng rng(params.seed);
    std::vector<double> margin(n, model.base_score_), grad(n), hess(n);
    std::vector<std::uint32_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0U);
    std::vector<std::size_t> all_features(p);
    std::iota(all_features.begin(), all_features.end(), std::size_t{0});
    const auto row_take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
    const auto col_take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.colsample * static_cast<double>(p))));

    TreeGrower grower(data, sorted, has_missing, params, std::max(1U, threads));
    for (int round = 0; round < params.max_rounds; ++round) {
        for (std::size_t r = 0; r < n; ++r) {
            const double prob = sigmoid(margin[r]);
            grad[r] = prob - data.labels[r];
            hess[r] = std::max(prob * (1.0 - prob), 1e-16);
        }
        std::vector<std::uint32_t> rows = all_rows;
        if (row_take < n) {
            // Partial Fisher-Yates: the first row_take entries are the sample.
            for (std::size_t i = 0; i < row_take; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
            rows.resize(row_take);
            std::ranges::sort(rows);
        }
        std::vector<std::size_t> features = all_features;
        if (col_take < p) {
            for (std::size_t i = 0; i < col_take; ++i) std::swap(features[i], features[i + rng.below(p - i)]);
            features.resize(col_take);
            std::ranges::sort(features);
        }
        Tree tree = grower.grow(grad, hess, rows, features);
        for (std::size_t r = 0; r < n; ++r)
            margin[r] += tree.leaf_value([&](std::int32_t f) { return data.at(r, static_cast<std::size_t>(f)); });
        model.trees_.push_back(std::move(tree));
    }
    model.rebuild_usage();
    return model;
}

std::vector<double> predict_margin(const BoostedModel& model, const Dataset& rows, std::size_t n) {
    check_rounds(model, n);
    check_layout(model, rows);
    std::vector<double> out(rows.rows(), model.base_score());
    for (std::size_t t = 0; t < n; ++t) {
        const auto& tree = model.trees()[t];
        for (std::size_t r = 0; r < out.size(); ++r)
            out[r] += tree.leaf_value([&](std::int32_t f) { return rows.at(r, static_cast<std::size_t>(f)); });
    }
    return out;
}

std::vector<double> predict_proba(const BoostedModel& model, const Dataset& rows, std::size_t n) {
    auto out = predict_margin(model, rows, n);
    for (auto& m : out) m = sigmoid(m);
    return out;
}

StagedMargins staged_margins(const BoostedModel& model, const Dataset& rows) {
    if (model.rounds_trained() == 0) fail(ErrorCode::argument, "model has no trained rounds");
    check_layout(model, rows);
    const std::size_t n_rows = rows.rows();
    StagedMargins staged(model.rounds_trained(), n_rows);
    std::vector<double> running(n_rows, model.base_score());
    for (std::size_t t = 0; t < model.rounds_trained(); ++t) {
        const auto& tree = model.trees()[t];
        auto out = staged.mutable_at(t + 1);
        for (std::size_t r = 0; r < n_rows; ++r) {
            running[r] += tree.leaf_value([&](std::int32_t f) { return rows.at(r, static_cast<std::size_t>(f)); });
            out[r] = running[r];
        }
    }
    return staged;
}

std::set<std::size_t> features_used(const BoostedModel& model, std::size_t n) {
    check_rounds(model, n);
    std::set<std::size_t> used;
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t s = 0; s < model.feature_usage()[t].size(); ++s)
            if (model.feature_usage()[t][s] > 0) used.insert(s);
    return used;
}

double log_loss(std::span<const std::uint8_t> labels, std::span<const double> margins) {
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        // log(1 + e^-m) for y=1, log(1 + e^m) for y=0, computed stably.
        const double z = labels[i] ? -margins[i] : margins[i];
        total += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    return labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
}

}  // namespace axmc::gbt
