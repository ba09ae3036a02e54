#include "axmc/error.hpp"
#include "axmc/logging.hpp"
#include "axmc/measures.hpp"
#include "axmc/rng.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace axmc;
using namespace axmc::measures;
using axmc::testing::make_numeric;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

struct Quiet {
    Quiet() { log::set_warning_sink({}); }
    ~Quiet() { log::set_warning_sink([](const std::string& m) { std::fprintf(stderr, "warning: %s\n", m.c_str()); }); }
};

// Rows realizing a per-group confusion table; predictions are encoded as margins of +-5.
struct TableBuilder {
    std::vector<std::uint8_t> labels, groups;
    std::vector<double> margins;

    TableBuilder& add(std::uint8_t group, std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
        auto push = [&](std::size_t count, std::uint8_t y, double m) {
            for (std::size_t i = 0; i < count; ++i) {
                labels.push_back(y);
                groups.push_back(group);
                margins.push_back(m);
            }
        };
        push(tp, 1, 5.0);
        push(fp, 0, 5.0);
        push(tn, 0, -5.0);
        push(fn, 1, -5.0);
        return *this;
    }

    Dataset data() const {
        std::vector<double> x(labels.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
        return make_numeric({x}, labels, groups);
    }
};

std::vector<std::uint8_t> swapped(std::vector<std::uint8_t> g) {
    for (auto& v : g) v = 1 - v;
    return g;
}

gbt::FeatureMap numeric_map(std::size_t p) {
    gbt::FeatureMap map;
    for (std::size_t i = 0; i < p; ++i) {
        map.columns.push_back("x" + std::to_string(i));
        map.source_of.push_back(i);
        map.sources.push_back(map.columns.back());
    }
    return map;
}

gbt::Tree stump(std::int32_t feature, double threshold, double left, double right) {
    gbt::Tree t;
    t.nodes = {{feature, threshold, true, 1, 2, 0.0}, {-1, 0, true, -1, -1, left}, {-1, 0, true, -1, -1, right}};
    return t;
}

gbt::Tree leaf(double v) {
    gbt::Tree t;
    t.nodes = {{-1, 0, true, -1, -1, v}};
    return t;
}

Dataset uniform_data(std::size_t n, std::size_t p, std::uint64_t seed, bool with_label_signal = true) {
    Rng rng(seed);
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    std::vector<std::uint8_t> y(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& c : cols) c[i] = rng.uniform();
        y[i] = with_label_signal ? (cols[0][i] + 0.3 * rng.normal() > 0.5) : rng.below(2);
        g[i] = rng.below(2);
    }
    return make_numeric(cols, y, g);
}

}  // namespace

TEST(Mmce, HandEvaluatedFixture) {
    auto d = make_numeric({{0, 1, 2, 3}}, {1, 0, 1, 0});
    auto ctx = EvalContext::from_margins(d, {logit(0.9), logit(0.8), logit(0.4), logit(0.1)}, 0.5);
    EXPECT_DOUBLE_EQ(mmce(ctx), 0.5);
    EXPECT_DOUBLE_EQ(mmce(ctx.with(1, 0.0)), 0.5);  // all positive -> fraction of negatives
    auto perfect = EvalContext::from_margins(d, {3, -3, 3, -3}, 0.5);
    EXPECT_EQ(mmce(perfect), 0.0);
}

TEST(Mmce, StepFunctionMatchesSortedProbabilityOracle) {
    Rng rng(17);
    const std::size_t n = 60;
    std::vector<double> margins(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        margins[i] = rng.uniform(-4, 4);
        y[i] = rng.below(2);
    }
    auto d = make_numeric({std::vector<double>(n, 0.0)}, y);
    auto ctx = EvalContext::from_margins(d, margins, 0.5);

    std::vector<double> pos_p, neg_p;
    for (std::size_t i = 0; i < n; ++i) (y[i] ? pos_p : neg_p).push_back(gbt::sigmoid(margins[i]));
    std::ranges::sort(pos_p);
    std::ranges::sort(neg_p);
    std::set<double> distinct;
    for (int k = 0; k <= 1000; ++k) {
        const double thr = k / 1000.0;
        // Errors: positives with p < thr plus negatives with p >= thr.
        const auto fn = std::ranges::lower_bound(pos_p, thr) - pos_p.begin();
        const auto fp = neg_p.end() - std::ranges::lower_bound(neg_p, thr);
        const double expected = static_cast<double>(fn + fp) / static_cast<double>(n);
        const double got = mmce(ctx.with(1, thr));
        ASSERT_DOUBLE_EQ(got, expected) << thr;
        distinct.insert(got);
    }
    EXPECT_LE(distinct.size(), n + 1);
}

TEST(Fairness, IndependenceGapFixture) {
    TableBuilder t;
    t.add(0, 40, 0, 0, 10).add(1, 30, 0, 0, 20);
    auto d = t.data();
    auto ctx = EvalContext::from_margins(d, t.margins, 0.5);
    EXPECT_NEAR(fairness_gap(ctx, t.groups, FairnessKind::independence), 0.2, 1e-12);
}

TEST(Fairness, F1GapFixture) {
    TableBuilder t;
    t.add(0, 40, 10, 5, 10).add(1, 20, 20, 5, 20);
    auto d = t.data();
    auto ctx = EvalContext::from_margins(d, t.margins, 0.5);
    EXPECT_NEAR(fairness_gap(ctx, t.groups, FairnessKind::f1), 0.3, 1e-12);
}

TEST(Fairness, SufficiencyTakesLargerRateGap) {
    TableBuilder t;
    // FPR 10/50 vs 20/50 (gap 0.2); FNR 10/50 vs 5/50 (gap 0.1).
    t.add(0, 40, 10, 40, 10).add(1, 45, 20, 30, 5);
    auto d = t.data();
    auto ctx = EvalContext::from_margins(d, t.margins, 0.5);
    EXPECT_NEAR(fairness_gap(ctx, t.groups, FairnessKind::sufficiency), 0.2, 1e-12);
}

TEST(Fairness, IdenticalTablesGiveZeroAndSwapInvariance) {
    TableBuilder t;
    t.add(0, 12, 3, 20, 5).add(1, 12, 3, 20, 5);
    auto d = t.data();
    auto ctx = EvalContext::from_margins(d, t.margins, 0.5);
    for (auto kind : {FairnessKind::independence, FairnessKind::sufficiency, FairnessKind::f1})
        EXPECT_EQ(fairness_gap(ctx, t.groups, kind), 0.0);

    TableBuilder u;
    u.add(0, 30, 7, 21, 9).add(1, 11, 13, 40, 2);
    auto du = u.data();
    auto cu = EvalContext::from_margins(du, u.margins, 0.5);
    const auto sw = swapped(u.groups);
    for (auto kind : {FairnessKind::independence, FairnessKind::sufficiency, FairnessKind::f1})
        EXPECT_DOUBLE_EQ(fairness_gap(cu, u.groups, kind), fairness_gap(cu, sw, kind));
    EXPECT_DOUBLE_EQ(calibration_gap(cu, u.groups, 10), calibration_gap(cu, sw, 10));
}

TEST(Fairness, ErrorsAndDegenerateF1) {
    TableBuilder t;
    t.add(0, 10, 2, 3, 4);
    auto d = t.data();
    auto ctx = EvalContext::from_margins(d, t.margins, 0.5);
    try {
        fairness_gap(ctx, t.groups, FairnessKind::f1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::group_coverage);
    }

    TableBuilder z;
    z.add(0, 10, 2, 3, 4).add(1, 0, 5, 5, 0);
    auto dz = z.data();
    auto cz = EvalContext::from_margins(dz, z.margins, 0.5);
    try {
        fairness_gap(cz, z.groups, FairnessKind::independence);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::undefined_rate);
    }

    // Group 1 has only negatives, all predicted negative: F1 undefined -> 0 with a warning.
    TableBuilder f;
    f.add(0, 10, 0, 0, 0).add(1, 0, 0, 8, 0);
    auto df = f.data();
    auto cf = EvalContext::from_margins(df, f.margins, 0.5);
    std::vector<std::string> warnings;
    log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
    EXPECT_DOUBLE_EQ(fairness_gap(cf, f.groups, FairnessKind::f1), 1.0);
    log::set_warning_sink([](const std::string& m) { std::fprintf(stderr, "warning: %s\n", m.c_str()); });
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Calibration, GapFixture) {
    std::vector<std::uint8_t> y, g;
    std::vector<double> m;
    for (int i = 0; i < 10; ++i) {
        y.push_back(i < 8);
        g.push_back(0);
        m.push_back(logit(0.8));
    }
    for (int i = 0; i < 10; ++i) {
        y.push_back(i < 4);
        g.push_back(1);
        m.push_back(logit(0.8));
    }
    auto d = make_numeric({std::vector<double>(y.size(), 0.0)}, y, g);
    auto ctx = EvalContext::from_margins(d, m, 0.5);
    EXPECT_NEAR(calibration_gap(ctx, g, 10), 0.4, 1e-12);
    EXPECT_NEAR(calibration_gap(ctx, swapped(g), 10), 0.4, 1e-12);
    EXPECT_THROW(calibration_gap(ctx, g, 1), Error);
}

TEST(Calibration, IdenticalGroupsGiveZero) {
    std::vector<std::uint8_t> y, g;
    std::vector<double> m;
    for (int grp = 0; grp < 2; ++grp)
        for (int i = 0; i < 20; ++i) {
            y.push_back(i % 4 == 0);
            g.push_back(static_cast<std::uint8_t>(grp));
            m.push_back(logit(0.25));
        }
    auto d = make_numeric({std::vector<double>(y.size(), 0.0)}, y, g);
    EXPECT_NEAR(calibration_gap(EvalContext::from_margins(d, m, 0.5), g, 10), 0.0, 1e-15);
}

TEST(Robustness, ConstantModelAndZeroNoise) {
    auto d = uniform_data(200, 3, 5);
    auto constant = gbt::BoostedModel::from_trees(0.3, {leaf(0.0)}, numeric_map(3));
    auto ctx = EvalContext::make(constant, d, 0.5, 1);
    EXPECT_EQ(robustness_perturbation(ctx, {RobustnessConfig::epsilon_min, 1, 5}), 0.0);

    gbt::BoosterParams p;
    p.max_rounds = 30;
    auto model = gbt::train(d, p);
    auto mctx = EvalContext::make(model, d, 0.5, 30);
    EXPECT_EQ(robustness_perturbation(mctx, {0.0, 3, 4}), 0.0);
}

TEST(Robustness, NoPointCrossesADistantSplit) {
    Rng rng(8);
    const std::size_t n = 300;
    std::vector<double> x(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = i % 2 ? rng.uniform(0.7, 1.0) : rng.uniform(0.0, 0.3);
        y[i] = rng.below(2);
    }
    auto d = make_numeric({x}, y);
    auto model = gbt::BoostedModel::from_trees(0.0, {stump(0, 0.5, -2.0, 2.0)}, numeric_map(1));
    RobustnessConfig cfg{0.01, 99, 5};
    // |x - 0.5| >= 0.2 = 20 * eps * range, so every perturbation would need a > 20 sd draw.
    Rng replay(cfg.seed);
    for (int r = 0; r < cfg.repeats; ++r) {
        auto noisy = perturb(d, cfg.epsilon, replay);
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(noisy.columns[0].values[i] < 0.5, x[i] < 0.5);
    }
    EXPECT_EQ(robustness_perturbation(EvalContext::make(model, d, 0.5, 1), cfg), 0.0);
}

TEST(Robustness, DeterministicAndStableAcrossSeeds) {
    auto d = uniform_data(600, 4, 33);
    gbt::BoosterParams p;
    p.max_rounds = 60;
    p.max_depth = 4;
    auto model = gbt::train(d, p);
    auto ctx = EvalContext::make(model, d, 0.5, 60);
    RobustnessConfig cfg{0.01, 5, 5};
    const double a = robustness_perturbation(ctx, cfg);
    EXPECT_EQ(a, robustness_perturbation(ctx, cfg));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    std::vector<double> vals;
    for (std::uint64_t s = 0; s < 10; ++s) vals.push_back(robustness_perturbation(ctx, {0.01, s, 5}));
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= 10.0;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    EXPECT_LT(std::sqrt(var / 9.0), 0.05);
}

TEST(Robustness, RequiresNumericFeature) {
    auto d = make_numeric({{0, 1, 0, 1}}, {0, 1, 0, 1});
    d.columns[0].indicator = true;
    auto model = gbt::BoostedModel::from_trees(0.0, {leaf(0.0)}, numeric_map(1));
    try {
        robustness_perturbation(EvalContext::make(model, d, 0.5, 1), {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_applicable);
    }
}

TEST(Sparsity, StumpAndZeroSplitModels) {
    auto d = uniform_data(50, 10, 1);
    auto one = gbt::BoostedModel::from_trees(0.0, {stump(4, 0.5, -1, 1), stump(4, 0.3, -1, 1)}, numeric_map(10));
    EXPECT_DOUBLE_EQ(sparsity(EvalContext::make(one, d, 0.5, 2)), 0.1);
    auto none = gbt::BoostedModel::from_trees(0.0, {leaf(0.1), leaf(0.2)}, numeric_map(10));
    EXPECT_EQ(sparsity(EvalContext::make(none, d, 0.5, 2)), 0.0);
}

TEST(Sparsity, MatchesTraversalOracleOnRandomModels) {
    auto d = uniform_data(200, 8, 2);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        gbt::BoosterParams p;
        p.max_rounds = 15;
        p.max_depth = 1 + static_cast<int>(seed);
        p.colsample = 0.5;
        p.seed = seed;
        auto model = gbt::train(d, p);
        for (std::size_t n : {1u, 5u, 15u}) {
            std::set<std::size_t> used;
            for (std::size_t t = 0; t < n; ++t)
                for (const auto& node : model.trees()[t].nodes)
                    if (!node.is_leaf()) used.insert(static_cast<std::size_t>(node.feature));
            EXPECT_DOUBLE_EQ(sparsity(EvalContext::make(model, d, 0.5, n)), static_cast<double>(used.size()) / 8.0);
        }
    }
}

TEST(Ale, IgnoredFeatureIsZeroAndLinearHasSlopeTwo) {
    auto d = uniform_data(500, 3, 4);
    Predictor linear = [](std::span<const double> row) { return 2.0 * row[1] + std::sin(row[2]); };
    auto flat = ale_curve(linear, d, 0, 20);
    for (double v : flat.values) EXPECT_EQ(v, 0.0);

    auto curve = ale_curve(linear, d, 1, 20);
    ASSERT_GE(curve.edges.size(), 3u);
    for (std::size_t k = 1; k < curve.edges.size(); ++k) {
        const double slope = (curve.values[k] - curve.values[k - 1]) / (curve.edges[k] - curve.edges[k - 1]);
        EXPECT_NEAR(slope, 2.0, 1e-9);
    }
    double mean = 0.0;
    for (double x : d.columns[1].values) mean += curve(x);
    EXPECT_NEAR(mean / 500.0, 0.0, 1e-9);
}

TEST(Ale, CenteredForTrainedModelAndRejectsConstantFeature) {
    auto d = uniform_data(400, 3, 9);
    d.columns[2].values.assign(400, 1.0);
    d.columns[2].recompute_range();
    gbt::BoosterParams p;
    p.max_rounds = 20;
    auto model = gbt::train(d, p);
    auto curve = ale_curve(model, d, 0, 20, 20);
    double mean = 0.0;
    for (double x : d.columns[0].values) mean += curve(x);
    EXPECT_NEAR(mean / 400.0, 0.0, 1e-9);
    try {
        ale_curve(model, d, 2, 20, 20);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_feature);
    }
}

TEST(MainEffectComplexity, LinearIsOneIgnoredIsZero) {
    auto d = uniform_data(500, 3, 12);
    Predictor linear = [](std::span<const double> row) { return 2.0 * row[0] - 0.5 * row[1]; };
    EXPECT_DOUBLE_EQ(main_effect_complexity(linear, d, 20), 1.0);
    Predictor constant = [](std::span<const double>) { return 0.7; };
    EXPECT_EQ(main_effect_complexity(constant, d, 20), 0.0);

    // A kinked main effect needs two segments.
    Predictor kink = [](std::span<const double> row) { return std::abs(row[0] - 0.5); };
    EXPECT_DOUBLE_EQ(main_effect_complexity(kink, d, 20), 2.0);

    auto wider = uniform_data(500, 4, 12);
    EXPECT_DOUBLE_EQ(main_effect_complexity(kink, wider, 20), main_effect_complexity(kink, d, 20));
    EXPECT_DOUBLE_EQ(main_effect_complexity(linear, wider, 20), 1.0);
}

TEST(MainEffectComplexity, AllConstantIsNotApplicable) {
    auto d = make_numeric({std::vector<double>(20, 1.0)}, std::vector<std::uint8_t>(20, 0));
    Predictor f = [](std::span<const double> row) { return row[0]; };
    try {
        main_effect_complexity(f, d, 20);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_applicable);
    }
}

TEST(InteractionStrength, StumpsAreAdditiveProductIsNot) {
    auto d = uniform_data(500, 4, 21);
    gbt::BoosterParams p;
    p.max_depth = 1;
    p.max_rounds = 100;
    p.eta = 0.3;
    auto model = gbt::train(d, p);
    EXPECT_LT(interaction_strength(model, d, 100, 20), 0.05);

    Predictor constant = [](std::span<const double>) { return 1.5; };
    EXPECT_EQ(interaction_strength(constant, d, 20), 0.0);

    auto centered = uniform_data(1000, 2, 22);
    Predictor product = [](std::span<const double> row) { return (row[0] - 0.5) * (row[1] - 0.5); };
    EXPECT_GT(interaction_strength(product, centered, 20), 0.5);
}

TEST(InferenceTime, MedianOfRepeatsAndNormalization) {
    auto d = uniform_data(2000, 5, 3);
    gbt::BoosterParams p;
    p.max_rounds = 200;
    p.max_depth = 6;
    auto model = gbt::train(d, p);
    auto ctx = EvalContext::make(model, d, 0.5, 200);
    EXPECT_THROW(inference_time(ctx, 2), Error);
    const double t = inference_time(ctx, 3);
    EXPECT_GT(t, 0.0);
    EXPECT_TRUE(std::isfinite(t));

    // Soft checks: fewer rounds should not cost more; doubling rows keeps the per-1000 figure comparable.
    const double short_prefix = inference_time(ctx.with(10, 0.5), 7);
    const double full = inference_time(ctx, 7);
    EXPECT_LT(short_prefix, full * 1.5);
    std::vector<std::size_t> doubled;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t i = 0; i < d.rows(); ++i) doubled.push_back(i);
    auto big = d.subset(doubled);
    const double big_t = inference_time(EvalContext::make(model, big, 0.5, 200), 7);
    EXPECT_LT(big_t, 2.0 * full);
    EXPECT_GT(big_t, 0.5 * full);
}

TEST(EvaluateAll, PerfectSymmetricPredictorIsZero) {
    TableBuilder t;
    t.add(0, 10, 0, 10, 0).add(1, 10, 0, 10, 0);
    auto d = t.data();
    auto ctx = EvalContext::from_margins(d, t.margins, 0.5);
    std::vector<MeasureSpec> specs{{MeasureId::mmce}, {MeasureId::f1_gap}};
    EXPECT_EQ(evaluate_all(specs, ctx, std::span<const std::uint8_t>(t.groups)), (MeasureVector{0.0, 0.0}));
    try {
        evaluate_all(specs, ctx, std::nullopt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::configuration);
    }
}

TEST(EvaluateAll, ThresholdOnlyMovesThresholdDependentEntries) {
    auto d = uniform_data(300, 3, 40);
    gbt::BoosterParams p;
    p.max_rounds = 20;
    auto model = gbt::train(d, p);
    std::vector<MeasureSpec> specs{{MeasureId::mmce}, {MeasureId::interaction_strength},
                                   {MeasureId::main_effect_complexity}, {MeasureId::sparsity}};
    auto ctx = EvalContext::make(model, d, 0.3, 20);
    auto a = evaluate_all(specs, ctx, std::nullopt);
    auto b = evaluate_all(specs, ctx.with(20, 0.7), std::nullopt);
    EXPECT_NE(a[0], b[0]);
    EXPECT_EQ(a[1], b[1]);
    EXPECT_EQ(a[2], b[2]);
    EXPECT_EQ(a[3], b[3]);
}

TEST(EvaluateAll, CachedEvaluatorMatchesSingleMeasureCalls) {
    Quiet quiet;
    auto d = uniform_data(300, 4, 41);
    gbt::BoosterParams p;
    p.max_rounds = 30;
    p.max_depth = 3;
    auto model = gbt::train(d, p);
    std::vector<MeasureSpec> specs(9);
    const MeasureId ids[] = {MeasureId::mmce,       MeasureId::f1_gap,   MeasureId::tpr_gap,
                             MeasureId::suff_gap,   MeasureId::calib_gap, MeasureId::robustness,
                             MeasureId::sparsity,   MeasureId::interaction_strength,
                             MeasureId::main_effect_complexity};
    for (std::size_t i = 0; i < 9; ++i) specs[i].id = ids[i];
    specs[5].robustness = {0.01, 4, 3};
    Evaluator evaluator(specs, model, d);
    const std::span<const std::uint8_t> groups(*d.groups);
    for (std::size_t n : {8u, 15u, 30u}) {
        for (double thr : {0.2, 0.5, 0.8}) {
            auto ctx = EvalContext::make(model, d, thr, n);
            auto cached = evaluator.evaluate(n, thr);
            ASSERT_EQ(cached.size(), 9u);
            EXPECT_EQ(cached[0], mmce(ctx));
            EXPECT_EQ(cached[1], fairness_gap(ctx, groups, FairnessKind::f1));
            EXPECT_EQ(cached[2], fairness_gap(ctx, groups, FairnessKind::independence));
            EXPECT_EQ(cached[3], fairness_gap(ctx, groups, FairnessKind::sufficiency));
            EXPECT_EQ(cached[4], calibration_gap(ctx, groups, 10));
            EXPECT_EQ(cached[5], robustness_perturbation(ctx, specs[5].robustness));
            EXPECT_EQ(cached[6], sparsity(ctx));
            EXPECT_EQ(cached[7], interaction_strength(model, d, n, 20));
            EXPECT_EQ(cached[8], main_effect_complexity(model, d, n, 20, 0.95));
            for (double v : cached) {
                EXPECT_TRUE(std::isfinite(v));
                EXPECT_GE(v, 0.0);
            }
        }
    }
}

TEST(Specs, Validation) {
    auto code = [](std::vector<MeasureSpec> specs, bool groups, bool timing = false) {
        try {
            validate_specs(specs, groups, timing);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::io;
    };
    EXPECT_EQ(code({{MeasureId::mmce}}, true), ErrorCode::configuration);
    EXPECT_EQ(code({{MeasureId::mmce}, {MeasureId::mmce}}, true), ErrorCode::configuration);
    EXPECT_EQ(code({{MeasureId::mmce}, {MeasureId::f1_gap}}, false), ErrorCode::configuration);
    EXPECT_EQ(code({{MeasureId::mmce}, {MeasureId::inference_time}}, false), ErrorCode::configuration);
    EXPECT_EQ(code({{MeasureId::mmce}, {MeasureId::inference_time}}, false, true), ErrorCode::io);
    EXPECT_EQ(code({{MeasureId::mmce}, {MeasureId::f1_gap}}, true), ErrorCode::io);
    MeasureSpec bad{MeasureId::robustness};
    bad.robustness.epsilon = 0.5;
    EXPECT_EQ(code({{MeasureId::mmce}, bad}, false), ErrorCode::configuration);
    EXPECT_EQ(measure_from_string("f1_gap"), MeasureId::f1_gap);
    EXPECT_THROW(measure_from_string("auc"), Error);
}
