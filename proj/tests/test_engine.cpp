#include "axmc/engine.hpp"
#include "axmc/error.hpp"
#include "axmc/logging.hpp"
#include "axmc/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace axmc;
using namespace axmc::engine;
using pareto::Provenance;

namespace {

SessionConfig small_config(std::optional<std::size_t> budget, std::uint64_t seed = 3, std::size_t rows = 600) {
    static const auto task = synthetic::income_like(rows, 11);
    SessionConfig c;
    c.schema = task.schema;
    c.csv = task.csv;
    c.measures = measures::parse_measure_list("mmce,f1_gap");
    c.seed = seed;
    c.m = 4;
    c.budget = budget;
    c.n_candidates = 200;
    c.forest.trees = 30;
    return c;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::io;
}

}  // namespace

TEST(SubevaluationGrid, FractionsAndExclusion) {
    EXPECT_EQ(subevaluation_rounds(100), (std::vector<int>{25, 50, 75, 90, 100}));
    EXPECT_EQ(subevaluation_rounds(10), (std::vector<int>{3, 5, 8, 9, 10}));
    EXPECT_EQ(subevaluation_rounds(11), (std::vector<int>{3, 6, 9, 10, 11}));
    EXPECT_EQ(subevaluation_rounds(1), (std::vector<int>{1}));

    PipelineConfig c;
    c.nrounds = 100;
    c.booster.max_rounds = 100;
    c.thr = 0.5;
    const auto grid = subevaluation_grid(c);
    EXPECT_EQ(grid.size(), 54u);
    EXPECT_EQ(std::ranges::count(grid, std::pair<int, double>{100, 0.5}), 0);
    std::set<std::pair<int, double>> unique(grid.begin(), grid.end());
    EXPECT_EQ(unique.size(), grid.size());

    c.thr = 0.37;  // off the threshold grid: nothing coincides with the full evaluation
    EXPECT_EQ(subevaluation_grid(c).size(), 55u);
}

TEST(Subevaluations, MatchIndependentEvaluation) {
    const auto cfg = small_config(0);
    const auto data = load_data(cfg);
    PipelineConfig c;
    c.nrounds = 20;
    c.booster.max_rounds = 20;
    c.booster.max_depth = 3;
    c.thr = 0.37;
    const auto model = gbt::train(data->train, c.booster);
    const auto subs = subevaluations(model, c, cfg.measures, data->valid);
    ASSERT_EQ(subs.size(), 55u);
    const auto groups = std::span<const std::uint8_t>(*data->valid.groups);
    for (const auto& s : subs) {
        EXPECT_EQ(s.provenance, Provenance::sub);
        EXPECT_EQ(s.config.booster, c.booster);
        auto ctx = measures::EvalContext::make(model, data->valid, s.config.thr, static_cast<std::size_t>(s.config.nrounds));
        EXPECT_EQ(s.measures, measures::evaluate_all(cfg.measures, ctx, groups));
    }
    PipelineConfig wrong = c;
    wrong.nrounds = 10;
    EXPECT_THROW(subevaluations(model, wrong, cfg.measures, data->valid), Error);
}

TEST(InitSession, ZeroBudgetAndDeterminism) {
    auto a = init_session(small_config(0));
    EXPECT_EQ(a.status, Status::done);
    EXPECT_EQ(a.archive.full_count(), 4u);
    for (const auto& r : a.archive.records()) {
        EXPECT_EQ(r.iteration, 0u);
        EXPECT_NO_THROW(r.config.validate());
        if (r.provenance == Provenance::sub) EXPECT_TRUE(r.parent.has_value());
    }
    auto b = init_session(small_config(0));
    EXPECT_TRUE(a.archive.same_evaluations(b.archive));
    auto c = init_session(small_config(0, 99));
    EXPECT_FALSE(a.archive.same_evaluations(c.archive));

    auto bad = small_config(0);
    bad.m = 3;
    EXPECT_EQ(code_of([&] { init_session(bad); }), ErrorCode::argument);
    auto unset = init_session(small_config(std::nullopt));
    EXPECT_EQ(unset.status, Status::idle);
}

TEST(InitSession, ConfigurationErrorsPropagate) {
    auto cfg = small_config(0);
    cfg.schema.protected_attribute.reset();
    for (auto& col : cfg.schema.columns)
        if (col.name == "sex") col.kind = ColumnKind::categorical;
    EXPECT_EQ(code_of([&] { init_session(cfg); }), ErrorCode::configuration);
    auto one = small_config(0);
    one.measures.resize(1);
    EXPECT_EQ(code_of([&] { init_session(one); }), ErrorCode::configuration);
}

TEST(Run, IterationStructureAndFrontInvariant) {
    auto st = init_session(small_config(4));
    std::vector<std::size_t> sizes{st.archive.size()};
    std::vector<std::size_t> fulls{st.archive.full_count()};
    Hooks hooks;
    hooks.after_iteration = [&](const SessionState& s) {
        sizes.push_back(s.archive.size());
        fulls.push_back(s.archive.full_count());
    };
    run(st, {}, hooks);
    EXPECT_EQ(st.status, Status::done);
    EXPECT_EQ(st.budget.iterations_done, 4u);
    EXPECT_EQ(st.archive.full_count(), st.m + 4);
    ASSERT_EQ(sizes.size(), 5u);
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        EXPECT_EQ(fulls[i], fulls[i - 1] + 1);
        EXPECT_LE(sizes[i] - sizes[i - 1], 1u + 55u);
    }
    // Each sub-record is non-dominated by every record that preceded it and by its batch mates.
    for (std::size_t i = 0; i < st.archive.size(); ++i) {
        const auto& r = st.archive[i];
        EXPECT_LE(r.iteration, st.budget.iterations_done);
        EXPECT_NO_THROW(r.config.validate());
        if (r.provenance != Provenance::sub) continue;
        for (std::size_t j = 0; j < st.archive.size(); ++j) {
            const auto& o = st.archive[j];
            const bool earlier = j < i;
            const bool sibling = o.provenance == Provenance::sub && o.parent == r.parent;
            if (earlier || sibling) EXPECT_FALSE(pareto::dominates(o.measures, r.measures)) << i << " vs " << j;
        }
    }
}

TEST(Run, StagedBudgetAndPause) {
    auto st = init_session(small_config(2));
    run(st);
    EXPECT_EQ(st.budget.iterations_done, 2u);
    EXPECT_EQ(st.status, Status::done);
    run(st, {3, {}});
    EXPECT_EQ(st.budget.iterations_done, 5u);
    run(st, {});  // nothing granted: stays done
    EXPECT_EQ(st.status, Status::done);

    std::atomic<bool> pause{false};
    Hooks hooks;
    hooks.pause = &pause;
    hooks.after_iteration = [&](const SessionState& s) {
        if (s.budget.iterations_done == 6) pause = true;
    };
    run(st, {4, {}}, hooks);
    EXPECT_EQ(st.status, Status::paused);
    EXPECT_EQ(st.budget.iterations_done, 6u);
    EXPECT_EQ(*st.budget.iterations_allowed, 9u);
    const auto before = st.archive.size();
    pause = false;
    run(st, {}, hooks);
    EXPECT_EQ(st.status, Status::done);
    EXPECT_EQ(st.budget.iterations_done, 9u);
    EXPECT_GT(st.archive.size(), before);
}

TEST(Run, SecondsBudgetStopsAfterDeadline) {
    auto st = init_session(small_config(std::nullopt));
    run(st, {std::nullopt, 0.05});
    EXPECT_EQ(st.status, Status::done);
    EXPECT_GE(st.budget.iterations_done, 1u);
    EXPECT_GE(st.budget.seconds_used, 0.05);
}

TEST(WeightBox, SetRulesAndRunningRejection) {
    auto st = init_session(small_config(2));
    EXPECT_EQ(code_of([&] { set_weight_box(st, mobo::WeightBox{{0.6, 0.6}, {1, 1}}); }), ErrorCode::argument);
    EXPECT_EQ(code_of([&] { set_weight_box(st, mobo::WeightBox::unit(3)); }), ErrorCode::argument);
    set_weight_box(st, mobo::WeightBox::first(0.1, 0.9));
    EXPECT_EQ(st.box, mobo::WeightBox::first(0.1, 0.9));
    const auto archive_size = st.archive.size();
    EXPECT_EQ(st.archive.size(), archive_size);

    Hooks hooks;
    bool rejected = false;
    hooks.after_iteration = [&](const SessionState&) {
        rejected = code_of([&] { set_weight_box(st, mobo::WeightBox::unit(2)); }) == ErrorCode::status;
    };
    run(st, {}, hooks);
    EXPECT_TRUE(rejected);
    EXPECT_EQ(st.box, mobo::WeightBox::first(0.1, 0.9));
    set_weight_box(st, mobo::WeightBox::unit(2));
    EXPECT_EQ(st.box, mobo::WeightBox::unit(2));
}

TEST(Snapshot, RestoreContinuesBitIdentically) {
    auto straight = init_session(small_config(6));
    run(straight);

    auto paused = init_session(small_config(6));
    std::atomic<bool> pause{false};
    Hooks hooks;
    hooks.pause = &pause;
    hooks.after_iteration = [&](const SessionState& s) {
        if (s.budget.iterations_done == 3) pause = true;
    };
    run(paused, {}, hooks);
    ASSERT_EQ(paused.status, Status::paused);
    auto restored = restore(snapshot(paused));
    EXPECT_EQ(restored.status, Status::paused);
    EXPECT_TRUE(restored.archive.same_evaluations(paused.archive));
    EXPECT_EQ(restored.rng, paused.rng);
    run(restored);
    EXPECT_EQ(restored.budget.iterations_done, 6u);
    EXPECT_TRUE(restored.archive.same_evaluations(straight.archive));
}

TEST(Snapshot, CorruptInputsAreRejected) {
    auto st = init_session(small_config(0));
    const auto text = snapshot(st);
    EXPECT_EQ(code_of([&] { restore(text.substr(0, text.size() / 2)); }), ErrorCode::restore);
    auto j = nlohmann::json::parse(text);
    j["format"] = "axmc-session-v0";
    EXPECT_EQ(code_of([&] { restore(j.dump()); }), ErrorCode::restore);
    j = nlohmann::json::parse(text);
    j["archive"]["k"] = 3;
    EXPECT_EQ(code_of([&] { restore(j.dump()); }), ErrorCode::restore);
    EXPECT_EQ(code_of([&] { restore("not json"); }), ErrorCode::restore);
}

TEST(Snapshot, SizeGrowsLinearlyWithArchive) {
    auto st = init_session(small_config(std::nullopt));
    std::vector<std::pair<double, double>> points;  // (records, bytes)
    for (std::size_t target : {2u, 4u, 8u}) {
        run(st, {target - st.budget.iterations_done, {}});
        points.emplace_back(static_cast<double>(st.archive.size()), static_cast<double>(snapshot(st).size()));
    }
    const double slope1 = (points[1].second - points[0].second) / (points[1].first - points[0].first);
    const double slope2 = (points[2].second - points[1].second) / (points[2].first - points[1].first);
    EXPECT_NEAR(slope1 / slope2, 1.0, 0.15);
}

TEST(Report, ValidationFrontIsArchivedAndTestIsRescored) {
    auto st = init_session(small_config(3));
    run(st);
    const auto valid = report(st, Split::valid);
    const auto front = pareto::distinct_front_indices(st.archive.records());
    ASSERT_EQ(valid.rows.size(), front.size());
    for (const auto& row : valid.rows) EXPECT_EQ(row.measures, st.archive[row.index].measures);
    for (std::size_t i = 1; i < valid.rows.size(); ++i) EXPECT_LE(valid.rows[i - 1].measures[0], valid.rows[i].measures[0]);

    const auto test = report(st, Split::test);
    ASSERT_EQ(test.rows.size(), front.size());
    for (std::size_t i = 1; i < test.rows.size(); ++i) EXPECT_LE(test.rows[i - 1].measures[0], test.rows[i].measures[0]);
    const auto data = load_data(st.config);
    for (const auto& row : test.rows) {
        const auto model = gbt::train(data->train, row.config.booster);
        auto ctx = measures::EvalContext::make(model, data->test, row.config.thr, static_cast<std::size_t>(row.config.nrounds));
        EXPECT_EQ(row.measures, measures::evaluate_all(st.config.measures, ctx, std::span<const std::uint8_t>(*data->test.groups)));
    }

    const auto csv = valid.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "eta,max_depth,min_child_weight,subsample,colsample,lambda,gamma,max_rounds,seed,nrounds,thr,mmce,f1_gap,"
              "provenance");
    EXPECT_EQ(static_cast<std::size_t>(std::ranges::count(csv, '\n')), valid.rows.size() + 1);
    EXPECT_EQ(valid.to_json()["rows"].size(), valid.rows.size());
}

TEST(Path, BestSoFarIsRunningMinimum) {
    auto st = init_session(small_config(3));
    run(st);
    const auto path = optimization_path(st);
    ASSERT_EQ(path.size(), st.archive.full_count());
    for (std::size_t i = 0; i < path.size(); ++i)
        for (std::size_t d = 0; d < st.k(); ++d) {
            EXPECT_LE(path[i].best[d], path[i].values[d]);
            if (i > 0) {
                EXPECT_LE(path[i].best[d], path[i - 1].best[d]);
                EXPECT_EQ(path[i].best[d], std::min(path[i - 1].best[d], path[i].values[d]));
            }
        }
}

TEST(Run, FailedEvaluationsArePenalized) {
    // Female rows never have a positive label, so the TPR gap is undefined for every model.
    auto cfg = small_config(2);
    std::string csv;
    std::istringstream in(cfg.csv);
    std::string line;
    std::getline(in, line);
    csv += line + "\n";
    while (std::getline(in, line)) {
        if (line.find(",Female,") != std::string::npos) line.back() = '0';
        csv += line + "\n";
    }
    cfg.csv = csv;
    cfg.measures = measures::parse_measure_list("mmce,tpr_gap");
    std::vector<std::string> warnings;
    log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
    auto st = init_session(cfg);
    run(st);
    log::set_warning_sink([](const std::string& m) { std::fprintf(stderr, "warning: %s\n", m.c_str()); });
    EXPECT_EQ(st.archive.size(), st.m + 2);
    EXPECT_EQ(st.archive.full_count(), st.m + 2);
    for (const auto& r : st.archive.records()) EXPECT_EQ(r.measures, (measures::MeasureVector{1.0, 1.0}));
    EXPECT_FALSE(warnings.empty());
}

TEST(Status, SummaryFields) {
    auto st = init_session(small_config(1));
    const auto j = status_json(st);
    EXPECT_EQ(j["status"], "idle");
    EXPECT_EQ(j["iterations_done"], 0);
    EXPECT_EQ(j["iterations_allowed"], 1);
    EXPECT_EQ(j["k"], 2);
    EXPECT_EQ(j["measures"], nlohmann::json({"mmce", "f1_gap"}));
    EXPECT_EQ(j["box"]["lower"], nlohmann::json({0.0, 0.0}));
}
