#include "axmc/engine.hpp"

#include "axmc/error.hpp"
#include "axmc/logging.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <limits>
#include <sstream>

namespace axmc::engine {

namespace {

using Clock = std::chrono::steady_clock;
using pareto::EvalRecord;
using pareto::Provenance;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const ConfigSpace& space() {
    static const ConfigSpace s;
    return s;
}

measures::MeasureVector penalty(const pareto::Archive& archive) {
    if (archive.empty()) return measures::MeasureVector(archive.k(), 1.0);
    return archive.bounds().second;
}

struct Outcome {
    EvalRecord full;
    std::vector<EvalRecord> subs;
};

Outcome evaluate_config(const SessionState& st, const PipelineConfig& config, std::size_t iteration) {
    const auto t0 = Clock::now();
    Outcome out;
    out.full.config = config;
    out.full.iteration = iteration;
    try {
        const auto model = gbt::train(st.data->train, config.booster);
        measures::Evaluator evaluator(st.config.measures, model, st.data->valid);
        out.full.measures = evaluator.evaluate(static_cast<std::size_t>(config.nrounds), config.thr);
        out.full.wall_time = seconds_since(t0);
        const auto t1 = Clock::now();
        out.subs = subevaluations(evaluator, config);
        const double each = out.subs.empty() ? 0.0 : seconds_since(t1) / static_cast<double>(out.subs.size());
        for (auto& s : out.subs) {
            s.iteration = iteration;
            s.wall_time = each;
        }
    } catch (const Error& e) {
        log::warn(std::string("evaluation failed (") + std::string(to_string(e.code())) + ": " + e.what() +
                  "); recording a penalized evaluation");
        out.full.measures = penalty(st.archive);
        out.full.wall_time = seconds_since(t0);
        out.subs.clear();
    }
    return out;
}

void record_outcome(SessionState& st, Outcome outcome, const Hooks& hooks) {
    const auto parent = st.archive.append(std::move(outcome.full));
    if (hooks.on_record) hooks.on_record(st.archive[parent], parent);
    for (auto& sub : pareto::filter_subevals(st.archive, outcome.subs)) {
        sub.parent = parent;
        const auto idx = st.archive.append(std::move(sub));
        if (hooks.on_record) hooks.on_record(st.archive[idx], idx);
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Status status_from_string(const std::string& s) {
    for (auto st : {Status::idle, Status::running, Status::paused, Status::done})
        if (to_string(st) == s) return st;
    fail(ErrorCode::restore, "unknown status '" + s + "'", "status");
}

}  // namespace

std::string_view to_string(Status s) {
    switch (s) {
        case Status::idle: return "idle";
        case Status::running: return "running";
        case Status::paused: return "paused";
        case Status::done: return "done";
    }
    return "unknown";
}

std::size_t SessionConfig::initial_design_size() const {
    return m > 0 ? m : std::max<std::size_t>(8, 4 + 2 * measures.size());
}

nlohmann::json SessionConfig::to_json() const {
    nlohmann::json specs = nlohmann::json::array();
    for (const auto& s : measures) specs.push_back(s.to_json());
    nlohmann::json j{{"schema", schema.to_json()},
                     {"csv", csv},
                     {"split", split.to_json()},
                     {"measures", std::move(specs)},
                     {"seed", seed},
                     {"m", m},
                     {"rho", rho},
                     {"n_candidates", n_candidates},
                     {"forest", forest.to_json()},
                     {"allow_inference_time", allow_inference_time}};
    j["budget"] = budget ? nlohmann::json(*budget) : nlohmann::json(nullptr);
    j["box"] = box ? box->to_json() : nlohmann::json(nullptr);
    return j;
}

SessionConfig SessionConfig::from_json(const nlohmann::json& j) {
    SessionConfig c;
    try {
        c.schema = Schema::from_json(j.at("schema"));
        c.csv = j.at("csv").get<std::string>();
        if (j.contains("split")) c.split = SplitSpec::from_json(j.at("split"));
        for (const auto& s : j.at("measures")) c.measures.push_back(measures::MeasureSpec::from_json(s));
        c.seed = j.value("seed", c.seed);
        c.m = j.value("m", c.m);
        if (j.contains("budget") && !j.at("budget").is_null()) c.budget = j.at("budget").get<std::size_t>();
        c.rho = j.value("rho", c.rho);
        c.n_candidates = j.value("n_candidates", c.n_candidates);
        if (j.contains("forest")) c.forest = mobo::ForestParams::from_json(j.at("forest"));
        c.allow_inference_time = j.value("allow_inference_time", c.allow_inference_time);
        if (j.contains("box") && !j.at("box").is_null()) c.box = mobo::WeightBox::from_json(j.at("box"), c.measures.size());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::configuration, std::string("malformed session config: ") + e.what());
    }
    return c;
}

bool Budget::exhausted() const {
    if (!iterations_allowed && !seconds_allowed) return true;
    return (iterations_allowed && iterations_done >= *iterations_allowed) ||
           (seconds_allowed && seconds_used >= *seconds_allowed);
}

nlohmann::json Budget::to_json() const {
    nlohmann::json j{{"iterations_done", iterations_done}, {"seconds_used", seconds_used}};
    j["iterations_allowed"] = iterations_allowed ? nlohmann::json(*iterations_allowed) : nlohmann::json(nullptr);
    j["seconds_allowed"] = seconds_allowed ? nlohmann::json(*seconds_allowed) : nlohmann::json(nullptr);
    return j;
}

Budget Budget::from_json(const nlohmann::json& j) {
    Budget b;
    b.iterations_done = j.at("iterations_done").get<std::size_t>();
    b.seconds_used = j.at("seconds_used").get<double>();
    b.iterations_allowed.reset();
    if (!j.at("iterations_allowed").is_null()) b.iterations_allowed = j.at("iterations_allowed").get<std::size_t>();
    if (!j.at("seconds_allowed").is_null()) b.seconds_allowed = j.at("seconds_allowed").get<double>();
    return b;
}

std::shared_ptr<const SessionData> load_data(const SessionConfig& config) {
    const auto raw = ingest_csv_text(config.csv, config.schema);
    auto parts = split(encode_categoricals(raw), config.split);
    for (const auto& w : parts.warnings) log::warn(w);
    return std::make_shared<const SessionData>(
        SessionData{std::move(parts.train), std::move(parts.valid), std::move(parts.test)});
}

SessionState init_session(SessionConfig config, std::string id, const Hooks& hooks) {
    const std::size_t m = config.initial_design_size();
    if (m < 4) fail(ErrorCode::argument, "initial design size must be at least 4", "m");
    if (!(config.rho > 0.0)) fail(ErrorCode::configuration, "rho must be positive", "rho");
    if (config.n_candidates < 1) fail(ErrorCode::configuration, "n_candidates must be at least 1", "n_candidates");

    SessionState st;
    st.id = std::move(id);
    st.data = load_data(config);
    measures::validate_specs(config.measures, st.data->train.has_groups(), config.allow_inference_time);
    const std::size_t k = config.measures.size();
    st.box = config.box ? *config.box : mobo::WeightBox::unit(k);
    if (st.box.k() != k) fail(ErrorCode::argument, "weight box arity does not match the measure count", "box");
    st.box.validate();
    st.config = std::move(config);
    st.archive = pareto::Archive(k);
    st.rng = Rng(st.config.seed);
    st.m = m;
    st.budget.iterations_allowed = st.config.budget.value_or(0);

    for (std::size_t i = 0; i < m; ++i) {
        auto c = space().sample(st.rng);
        c.booster.seed = st.rng.next_u64();
        record_outcome(st, evaluate_config(st, c, 0), hooks);
    }
    st.status = (st.config.budget && *st.config.budget == 0) ? Status::done : Status::idle;
    return st;
}

void run_iteration(SessionState& st, const Hooks& hooks) {
    if (st.status != Status::running) fail(ErrorCode::status, "run_iteration requires a running session", "status");
    if (st.budget.exhausted()) fail(ErrorCode::status, "iteration budget exhausted", "budget");

    const auto w = mobo::sample_weights(st.box, st.rng);
    const auto cfg = mobo::ScalarizerConfig::from_archive(st.archive, st.config.rho);
    auto forest = st.config.forest;
    forest.seed = st.rng.next_u64();
    const auto surrogate = mobo::fit_surrogate(st.archive, w, cfg, space(), forest);

    std::size_t incumbent = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < st.archive.size(); ++i) {
        const double v = mobo::scalarize(st.archive[i].measures, w, cfg);
        if (v < best) {
            best = v;
            incumbent = i;
        }
    }
    auto config = mobo::propose(surrogate, space(), best, space().encode(st.archive[incumbent].config), st.rng,
                                st.config.n_candidates);
    config.booster.seed = st.rng.next_u64();

    record_outcome(st, evaluate_config(st, config, st.budget.iterations_done + 1), hooks);
    ++st.budget.iterations_done;
}

void run(SessionState& st, const RunRequest& request, const Hooks& hooks) {
    if (st.status == Status::running) fail(ErrorCode::status, "session is already running", "status");
    if (request.seconds && !(*request.seconds > 0.0))
        fail(ErrorCode::argument, "seconds must be positive", "seconds");
    if (request.iterations) {
        st.budget.iterations_allowed = st.budget.iterations_done + *request.iterations;
        if (!request.seconds) st.budget.seconds_allowed.reset();
    }
    if (request.seconds) {
        st.budget.seconds_allowed = st.budget.seconds_used + *request.seconds;
        if (!request.iterations) st.budget.iterations_allowed.reset();
    }
    if (st.budget.exhausted()) {
        st.status = Status::done;
        return;
    }
    st.status = Status::running;
    try {
        while (!st.budget.exhausted()) {
            if (hooks.pause && hooks.pause->load()) break;
            const auto t0 = Clock::now();
            run_iteration(st, hooks);
            st.budget.seconds_used += seconds_since(t0);
            if (hooks.after_iteration) hooks.after_iteration(st);
        }
    } catch (...) {
        st.status = Status::paused;
        throw;
    }
    st.status = st.budget.exhausted() ? Status::done : Status::paused;
}

void set_weight_box(SessionState& st, mobo::WeightBox box) {
    if (st.status == Status::running) fail(ErrorCode::status, "cannot change the weight box while running", "status");
    if (box.k() != st.k())
        fail(ErrorCode::argument,
             "weight box has " + std::to_string(box.k()) + " objectives, session has " + std::to_string(st.k()), "box");
    box.validate();
    st.box = std::move(box);
}

std::vector<int> subevaluation_rounds(int nrounds) {
    if (nrounds < 1) fail(ErrorCode::argument, "nrounds must be positive", "nrounds");
    std::vector<int> out;
    for (int pct : {25, 50, 75, 90}) {
        const int n = (pct * nrounds + 99) / 100;  // ceil without floating point
        if (out.empty() || out.back() != n) out.push_back(n);
    }
    if (out.back() != nrounds) out.push_back(nrounds);
    return out;
}

std::vector<std::pair<int, double>> subevaluation_grid(const PipelineConfig& config) {
    std::vector<std::pair<int, double>> grid;
    for (int n : subevaluation_rounds(config.nrounds))
        for (int k = 0; k <= threshold_steps; ++k) {
            const double thr = static_cast<double>(k) / threshold_steps;
            if (n == config.nrounds && thr == config.thr) continue;
            grid.emplace_back(n, thr);
        }
    return grid;
}

std::vector<EvalRecord> subevaluations(measures::Evaluator& evaluator, const PipelineConfig& config) {
    std::vector<EvalRecord> out;
    for (const auto& [n, thr] : subevaluation_grid(config)) {
        EvalRecord r;
        try {
            r.measures = evaluator.evaluate(static_cast<std::size_t>(n), thr);
        } catch (const Error& e) {
            log::warn("sub-evaluation at n=" + std::to_string(n) + ", thr=" + format_double(thr) + " skipped: " + e.what());
            continue;
        }
        r.config = config;
        r.config.nrounds = n;
        r.config.thr = thr;
        r.provenance = Provenance::sub;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<EvalRecord> subevaluations(const gbt::BoostedModel& model, const PipelineConfig& config,
                                       std::span<const measures::MeasureSpec> specs, const Dataset& valid) {
    if (model.rounds_trained() != static_cast<std::size_t>(config.nrounds))
        fail(ErrorCode::argument, "model must be trained with exactly nrounds rounds", "nrounds");
    measures::Evaluator evaluator({specs.begin(), specs.end()}, model, valid);
    return subevaluations(evaluator, config);
}

std::string snapshot(const SessionState& st) {
    nlohmann::json j{{"format", snapshot_format},
                     {"id", st.id},
                     {"status", to_string(st.status == Status::running ? Status::paused : st.status)},
                     {"m", st.m},
                     {"config", st.config.to_json()},
                     {"budget", st.budget.to_json()},
                     {"box", st.box.to_json()},
                     {"rng", st.rng.save()},
                     {"archive", st.archive.to_json()}};
    return j.dump();
}

SessionState restore(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object() || !j.contains("format") || j.at("format") != snapshot_format)
            fail(ErrorCode::restore, "not an " + std::string(snapshot_format) + " snapshot");
        SessionState st;
        st.id = j.at("id").get<std::string>();
        st.config = SessionConfig::from_json(j.at("config"));
        st.data = load_data(st.config);
        st.archive = pareto::Archive::from_json(j.at("archive"));
        if (st.archive.k() != st.config.measures.size()) fail(ErrorCode::restore, "archive arity does not match measures");
        st.box = mobo::WeightBox::from_json(j.at("box"), st.config.measures.size());
        st.rng.load(j.at("rng").get<std::string>());
        st.budget = Budget::from_json(j.at("budget"));
        st.status = status_from_string(j.at("status").get<std::string>());
        if (st.status == Status::running) st.status = Status::paused;
        st.m = j.at("m").get<std::size_t>();
        return st;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::restore, std::string("corrupt snapshot: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::restore) throw;
        fail(ErrorCode::restore, std::string("invalid snapshot: ") + e.what(), e.field());
    }
}

Split split_from_string(std::string_view s) {
    if (s == "valid") return Split::valid;
    if (s == "test") return Split::test;
    fail(ErrorCode::argument, "split must be 'valid' or 'test'", "split");
}

nlohmann::json FrontTable::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json m;
        for (std::size_t i = 0; i < measure_ids.size(); ++i) m[measure_ids[i]] = r.measures[i];
        rows_json.push_back({{"index", r.index},
                             {"config", r.config.to_json()},
                             {"measures", std::move(m)},
                             {"provenance", pareto::to_string(r.provenance)}});
    }
    return {{"split", split == Split::valid ? "valid" : "test"}, {"measures", measure_ids}, {"rows", std::move(rows_json)}};
}

std::string FrontTable::to_csv() const {
    std::ostringstream out;
    out << "eta,max_depth,min_child_weight,subsample,colsample,lambda,gamma,max_rounds,seed,nrounds,thr";
    for (const auto& id : measure_ids) out << ',' << id;
    out << ",provenance\n";
    for (const auto& r : rows) {
        const auto& b = r.config.booster;
        out << format_double(b.eta) << ',' << b.max_depth << ',' << format_double(b.min_child_weight) << ','
            << format_double(b.subsample) << ',' << format_double(b.colsample) << ',' << format_double(b.lambda) << ','
            << format_double(b.gamma) << ',' << b.max_rounds << ',' << b.seed << ',' << r.config.nrounds << ','
            << format_double(r.config.thr);
        for (double v : r.measures) out << ',' << format_double(v);
        out << ',' << pareto::to_string(r.provenance) << '\n';
    }
    return out.str();
}

FrontTable report(const SessionState& st, Split split) {
    if (st.archive.empty()) fail(ErrorCode::argument, "session archive is empty", "archive");
    FrontTable table;
    table.split = split;
    for (const auto& s : st.config.measures) table.measure_ids.emplace_back(measures::to_string(s.id));
    for (auto i : pareto::distinct_front_indices(st.archive.records())) {
        const auto& r = st.archive[i];
        table.rows.push_back({i, r.config, r.measures, r.provenance});
    }
    if (split == Split::test) {
        // Retraining is deterministic, so each distinct booster setting reproduces its archived model.
        std::vector<std::pair<gbt::BoosterParams, std::shared_ptr<gbt::BoostedModel>>> models;
        for (auto& row : table.rows) {
            auto it = std::ranges::find_if(models, [&](const auto& p) { return p.first == row.config.booster; });
            if (it == models.end()) {
                models.emplace_back(row.config.booster,
                                    std::make_shared<gbt::BoostedModel>(gbt::train(st.data->train, row.config.booster)));
                it = models.end() - 1;
            }
            measures::Evaluator evaluator(st.config.measures, *it->second, st.data->test);
            row.measures = evaluator.evaluate(static_cast<std::size_t>(row.config.nrounds), row.config.thr);
        }
    }
    std::ranges::stable_sort(table.rows, [](const FrontRow& a, const FrontRow& b) { return a.measures[0] < b.measures[0]; });
    return table;
}

std::vector<PathPoint> optimization_path(const SessionState& st) {
    std::vector<PathPoint> path;
    measures::MeasureVector best(st.k(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < st.archive.size(); ++i) {
        const auto& r = st.archive[i];
        if (r.provenance != Provenance::full) continue;
        for (std::size_t d = 0; d < best.size(); ++d) best[d] = std::min(best[d], r.measures[d]);
        path.push_back({i, r.iteration, r.measures, best});
    }
    return path;
}

nlohmann::json path_to_json(const SessionState& st) {
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& s : st.config.measures) ids.push_back(measures::to_string(s.id));
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : optimization_path(st))
        points.push_back({{"index", p.index}, {"iteration", p.iteration}, {"values", p.values}, {"best", p.best}});
    return {{"measures", std::move(ids)}, {"points", std::move(points)}};
}

nlohmann::json status_json(const SessionState& st) {
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& s : st.config.measures) ids.push_back(measures::to_string(s.id));
    nlohmann::json j{{"id", st.id},
                     {"status", to_string(st.status)},
                     {"iterations_done", st.budget.iterations_done},
                     {"k", st.k()},
                     {"measures", std::move(ids)},
                     {"box", st.box.to_json()},
                     {"m", st.m},
                     {"archive_size", st.archive.size()},
                     {"full_records", st.archive.full_count()},
                     {"front_size", st.archive.empty() ? 0 : pareto::distinct_front_indices(st.archive.records()).size()}};
    j["iterations_allowed"] =
        st.budget.iterations_allowed ? nlohmann::json(*st.budget.iterations_allowed) : nlohmann::json(nullptr);
    j["seconds_allowed"] = st.budget.seconds_allowed ? nlohmann::json(*st.budget.seconds_allowed) : nlohmann::json(nullptr);
    return j;
}

}  // namespace axmc::engine
