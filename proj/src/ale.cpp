// Accumulated local effects and the two interpretability measures built on them:
// main effect complexity and interaction strength.

#include "axmc/error.hpp"
#include "axmc/logging.hpp"
#include "axmc/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace axmc::measures {

namespace {

std::vector<double> dense_rows(const Dataset& data) {
    if (!data.all_numeric()) fail(ErrorCode::argument, "ALE requires one-hot encoded data");
    const std::size_t n = data.rows(), p = data.features();
    std::vector<double> out(n * p);
    for (std::size_t c = 0; c < p; ++c)
        for (std::size_t r = 0; r < n; ++r) out[r * p + c] = data.columns[c].values[r];
    return out;
}

bool is_constant(const Column& col) { return std::isnan(col.min) || !(col.max > col.min); }

AleCurve ale_from_dense(const Predictor& f, const Dataset& data, std::span<const double> dense, std::size_t feature,
                        int bins) {
    if (feature >= data.features()) fail(ErrorCode::argument, "feature index out of range", "feature");
    if (bins < 2) fail(ErrorCode::argument, "ALE needs at least 2 bins", "bins");
    const auto& col = data.columns[feature];
    if (col.kind != ColumnKind::numeric) fail(ErrorCode::argument, "ALE needs a numeric feature", "feature");
    if (is_constant(col)) fail(ErrorCode::degenerate_feature, "feature '" + col.name + "' is constant", "feature");

    std::vector<double> sorted;
    for (double v : col.values)
        if (!std::isnan(v)) sorted.push_back(v);
    std::ranges::sort(sorted);
    const std::size_t m = sorted.size();

    // Nearest-rank quantile edges, duplicates dropped.
    AleCurve curve;
    curve.edges.push_back(sorted.front());
    for (int k = 1; k <= bins; ++k) {
        const auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(k) * static_cast<double>(m) / bins));
        const double z = sorted[std::max<std::size_t>(rank, 1) - 1];
        if (z > curve.edges.back()) curve.edges.push_back(z);
    }
    const std::size_t k_bins = curve.edges.size() - 1;

    const std::size_t p = data.features();
    std::vector<double> effect(k_bins + 1, 0.0);
    std::vector<std::size_t> count(k_bins + 1, 0);
    std::vector<double> row(p);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const double x = col.values[r];
        if (std::isnan(x)) continue;
        auto it = std::ranges::lower_bound(curve.edges.begin() + 1, curve.edges.end(), x);
        const auto b = static_cast<std::size_t>(it - curve.edges.begin());
        std::copy_n(dense.begin() + static_cast<std::ptrdiff_t>(r * p), p, row.begin());
        row[feature] = curve.edges[b];
        const double upper = f(row);
        row[feature] = curve.edges[b - 1];
        const double lower = f(row);
        effect[b] += upper - lower;
        ++count[b];
    }
    curve.values.assign(k_bins + 1, 0.0);
    for (std::size_t b = 1; b <= k_bins; ++b)
        curve.values[b] = curve.values[b - 1] + (count[b] ? effect[b] / static_cast<double>(count[b]) : 0.0);

    double mean = 0.0;
    for (double x : sorted) mean += curve(x);
    mean /= static_cast<double>(m);
    for (auto& v : curve.values) v -= mean;
    return curve;
}

struct Moments {
    double n = 0, x = 0, y = 0, xx = 0, xy = 0, yy = 0;
};

// Residual sum of squares of the least-squares line through points [lo, hi).
double line_sse(const std::vector<Moments>& prefix, std::size_t lo, std::size_t hi) {
    const auto& a = prefix[lo];
    const auto& b = prefix[hi];
    const double n = b.n - a.n;
    if (n <= 0) return 0.0;
    const double sx = b.x - a.x, sy = b.y - a.y;
    const double sxx = b.xx - a.xx - sx * sx / n;
    const double sxy = b.xy - a.xy - sx * sy / n;
    const double syy = b.yy - a.yy - sy * sy / n;
    double sse = syy;
    if (sxx > 1e-300) sse -= sxy * sxy / sxx;
    return std::max(0.0, sse);
}

}  // namespace

double AleCurve::operator()(double x) const {
    if (std::isnan(x) || edges.empty()) return 0.0;
    if (x <= edges.front()) return values.front();
    if (x >= edges.back()) return values.back();
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const auto hi = static_cast<std::size_t>(it - edges.begin());
    const auto lo = hi - 1;
    const double t = (x - edges[lo]) / (edges[hi] - edges[lo]);
    return values[lo] + t * (values[hi] - values[lo]);
}

Predictor model_predictor(const gbt::BoostedModel& model, std::size_t n, PredictionScale scale) {
    if (n < 1 || n > model.rounds_trained()) fail(ErrorCode::argument, "round count out of range", "n");
    if (scale == PredictionScale::margin)
        return [&model, n](std::span<const double> row) { return model.margin_row(row, n); };
    return [&model, n](std::span<const double> row) { return gbt::sigmoid(model.margin_row(row, n)); };
}

AleCurve ale_curve(const Predictor& f, const Dataset& data, std::size_t feature, int bins) {
    const auto dense = dense_rows(data);
    return ale_from_dense(f, data, dense, feature, bins);
}

AleCurve ale_curve(const gbt::BoostedModel& model, const Dataset& data, std::size_t feature, std::size_t n, int bins,
                   PredictionScale scale) {
    return ale_curve(model_predictor(model, n, scale), data, feature, bins);
}

int segments_needed(const AleCurve& curve, std::span<const double> xs, double tolerance) {
    std::vector<std::pair<double, double>> pts;
    for (double x : xs)
        if (!std::isnan(x)) pts.emplace_back(x, curve(x));
    if (pts.size() < 2) return 0;
    std::ranges::sort(pts);

    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    std::vector<Moments> prefix(pts.size() + 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i].first - mx, y = pts[i].second - my;
        auto m = prefix[i];
        m.n += 1;
        m.x += x;
        m.y += y;
        m.xx += x * x;
        m.xy += x * y;
        m.yy += y * y;
        prefix[i + 1] = m;
    }
    const double sst = prefix.back().yy - prefix.back().y * prefix.back().y / prefix.back().n;
    if (!(sst > 0.0)) return 0;

    // Breakpoint candidates: interior bin edges, as split positions into the sorted points.
    std::vector<std::size_t> candidates;
    for (std::size_t e = 1; e + 1 < curve.edges.size(); ++e) {
        const auto pos = static_cast<std::size_t>(
            std::upper_bound(pts.begin(), pts.end(), curve.edges[e],
                             [](double v, const std::pair<double, double>& p) { return v < p.first; }) -
            pts.begin());
        if (pos > 0 && pos < pts.size() && (candidates.empty() || candidates.back() != pos)) candidates.push_back(pos);
    }

    std::vector<std::size_t> cuts;
    auto total_sse = [&](const std::vector<std::size_t>& sorted_cuts) {
        double sse = 0.0;
        std::size_t lo = 0;
        for (auto c : sorted_cuts) {
            sse += line_sse(prefix, lo, c);
            lo = c;
        }
        return sse + line_sse(prefix, lo, pts.size());
    };
    double sse = total_sse(cuts);
    while (1.0 - sse / sst < tolerance) {
        std::size_t best = 0;
        double best_sse = std::numeric_limits<double>::infinity();
        for (auto c : candidates) {
            if (std::ranges::binary_search(cuts, c)) continue;
            auto trial = cuts;
            trial.insert(std::ranges::upper_bound(trial, c), c);
            const double s = total_sse(trial);
            if (s < best_sse) {
                best_sse = s;
                best = c;
            }
        }
        if (!std::isfinite(best_sse)) break;
        cuts.insert(std::ranges::upper_bound(cuts, best), best);
        sse = best_sse;
    }
    return static_cast<int>(cuts.size()) + 1;
}

double main_effect_complexity(const Predictor& f, const Dataset& data, int bins, double tolerance) {
    const auto dense = dense_rows(data);
    double weighted = 0.0, total_var = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < data.features(); ++j) {
        const auto& col = data.columns[j];
        if (is_constant(col)) continue;
        any = true;
        const auto curve = ale_from_dense(f, data, dense, j, bins);
        double var = 0.0;
        std::size_t m = 0;
        for (double x : col.values) {
            if (std::isnan(x)) continue;
            const double a = curve(x);
            var += a * a;
            ++m;
        }
        var /= static_cast<double>(m);
        if (!(var > 0.0)) continue;
        weighted += var * segments_needed(curve, col.values, tolerance);
        total_var += var;
    }
    if (!any) fail(ErrorCode::not_applicable, "main effect complexity needs a non-constant feature");
    return total_var > 0.0 ? weighted / total_var : 0.0;
}

double main_effect_complexity(const gbt::BoostedModel& model, const Dataset& data, std::size_t n, int bins,
                              double tolerance) {
    return main_effect_complexity(model_predictor(model, n, PredictionScale::margin), data, bins, tolerance);
}

double interaction_strength(const Predictor& f, const Dataset& data, int bins) {
    const auto dense = dense_rows(data);
    const std::size_t n = data.rows(), p = data.features();
    if (n == 0) fail(ErrorCode::input, "interaction strength on empty data");
    if (std::ranges::all_of(data.columns, [](const Column& c) { return is_constant(c); }))
        fail(ErrorCode::not_applicable, "interaction strength needs a non-constant feature");

    std::vector<double> pred(n);
    for (std::size_t r = 0; r < n; ++r) pred[r] = f(std::span(dense).subspan(r * p, p));
    const double mean = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(n);
    std::vector<double> surrogate(n, mean);
    for (std::size_t j = 0; j < p; ++j) {
        if (is_constant(data.columns[j])) continue;
        const auto curve = ale_from_dense(f, data, dense, j, bins);
        for (std::size_t r = 0; r < n; ++r) surrogate[r] += curve(data.columns[j].values[r]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        num += (pred[r] - surrogate[r]) * (pred[r] - surrogate[r]);
        den += (pred[r] - mean) * (pred[r] - mean);
    }
    if (!(den > 1e-300)) return 0.0;
    const double ias = num / den;
    if (ias > 1.0) {
        log::warn("interaction strength " + std::to_string(ias) + " clipped to 1");
        return 1.0;
    }
    return ias;
}

double interaction_strength(const gbt::BoostedModel& model, const Dataset& data, std::size_t n, int bins) {
    return interaction_strength(model_predictor(model, n, PredictionScale::margin), data, bins);
}

}  // namespace axmc::measures
