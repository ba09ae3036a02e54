#include "axmc/measures.hpp"

#include "axmc/error.hpp"
#include "axmc/logging.hpp"
#include "axmc/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

namespace axmc::measures {

namespace {

constexpr std::pair<MeasureId, std::string_view> names[] = {
    {MeasureId::mmce, "mmce"},
    {MeasureId::f1_gap, "f1_gap"},
    {MeasureId::tpr_gap, "tpr_gap"},
    {MeasureId::suff_gap, "suff_gap"},
    {MeasureId::calib_gap, "calib_gap"},
    {MeasureId::robustness, "robustness"},
    {MeasureId::sparsity, "sparsity"},
    {MeasureId::interaction_strength, "interaction_strength"},
    {MeasureId::main_effect_complexity, "main_effect_complexity"},
    {MeasureId::inference_time, "inference_time"},
};

const gbt::BoostedModel& require_model(const EvalContext& ctx, std::string_view measure) {
    if (ctx.model == nullptr)
        fail(ErrorCode::configuration, std::string(measure) + " needs a trained model in the evaluation context");
    return *ctx.model;
}

void require_groups(const EvalContext& ctx, std::span<const std::uint8_t> groups) {
    if (groups.size() != ctx.data->rows())
        fail(ErrorCode::argument, "group labels must align with the evaluation rows", "groups");
}

double rate(std::size_t num, std::size_t den, const char* what, int group) {
    if (den == 0)
        fail(ErrorCode::undefined_rate, std::string(what) + " undefined for group " + std::to_string(group) +
                                            " (zero denominator)");
    return static_cast<double>(num) / static_cast<double>(den);
}

double f1_score(const Confusion& c, int group) {
    const std::size_t den = 2 * c.tp + c.fp + c.fn;
    if (den == 0) {
        log::warn("F1 undefined for group " + std::to_string(group) + "; using 0");
        return 0.0;
    }
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

bool has_numeric_feature(const Dataset& data) {
    return std::ranges::any_of(data.columns,
                               [](const Column& c) { return c.kind == ColumnKind::numeric && !c.indicator; });
}

double accuracy_gap(std::span<const std::uint8_t> labels, std::span<const double> clean, std::span<const double> noisy,
                    double thr) {
    std::size_t right_clean = 0, right_noisy = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        right_clean += hard_label(clean[i], thr) == (labels[i] == 1);
        right_noisy += hard_label(noisy[i], thr) == (labels[i] == 1);
    }
    return std::abs(static_cast<double>(right_clean) - static_cast<double>(right_noisy)) /
           static_cast<double>(labels.size());
}

}  // namespace

std::string_view to_string(MeasureId id) {
    for (const auto& [m, name] : names)
        if (m == id) return name;
    return "unknown";
}

MeasureId measure_from_string(std::string_view id) {
    for (const auto& [m, name] : names)
        if (name == id) return m;
    fail(ErrorCode::configuration, "unknown measure '" + std::string(id) + "'", "measures");
}

bool needs_groups(MeasureId id) {
    return id == MeasureId::f1_gap || id == MeasureId::tpr_gap || id == MeasureId::suff_gap ||
           id == MeasureId::calib_gap;
}

MeasureSpec MeasureSpec::from_json(const nlohmann::json& j) {
    MeasureSpec s;
    try {
        if (j.is_string()) {
            s.id = measure_from_string(j.get<std::string>());
            return s;
        }
        s.id = measure_from_string(j.at("id").get<std::string>());
        s.robustness.epsilon = j.value("epsilon", s.robustness.epsilon);
        s.robustness.seed = j.value("seed", s.robustness.seed);
        s.robustness.repeats = j.value("repeats", s.robustness.repeats);
        s.ale_bins = j.value("ale_bins", s.ale_bins);
        s.calibration_bins = j.value("calibration_bins", s.calibration_bins);
        s.mec_tolerance = j.value("mec_tolerance", s.mec_tolerance);
        s.timing_repeats = j.value("timing_repeats", s.timing_repeats);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::configuration, std::string("malformed measure spec: ") + e.what(), "measures");
    }
    return s;
}

nlohmann::json MeasureSpec::to_json() const {
    return {{"id", to_string(id)},
            {"epsilon", robustness.epsilon},
            {"seed", robustness.seed},
            {"repeats", robustness.repeats},
            {"ale_bins", ale_bins},
            {"calibration_bins", calibration_bins},
            {"mec_tolerance", mec_tolerance},
            {"timing_repeats", timing_repeats}};
}

std::vector<MeasureSpec> parse_measure_list(std::string_view ids) {
    std::vector<MeasureSpec> out;
    std::size_t start = 0;
    while (start <= ids.size()) {
        const auto comma = std::min(ids.find(',', start), ids.size());
        auto token = ids.substr(start, comma - start);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (token.empty()) fail(ErrorCode::configuration, "empty entry in measure list", "measures");
        MeasureSpec spec;
        spec.id = measure_from_string(token);
        out.push_back(spec);
        start = comma + 1;
    }
    return out;
}

void RobustnessConfig::validate() const {
    if (!(epsilon >= epsilon_min && epsilon <= epsilon_max))
        fail(ErrorCode::configuration, "robustness epsilon must lie in [0.001, 0.01]", "robustness.epsilon");
    if (repeats < 1) fail(ErrorCode::configuration, "robustness repeats must be >= 1", "robustness.repeats");
}

void validate_specs(std::span<const MeasureSpec> specs, bool has_groups, bool allow_inference_time) {
    if (specs.size() < min_objectives || specs.size() > max_objectives)
        fail(ErrorCode::configuration, "between 2 and 5 measures are required, got " + std::to_string(specs.size()),
             "measures");
    std::set<MeasureId> seen;
    for (const auto& s : specs) {
        if (!seen.insert(s.id).second)
            fail(ErrorCode::configuration, "duplicate measure '" + std::string(to_string(s.id)) + "'", "measures");
        if (needs_groups(s.id) && !has_groups)
            fail(ErrorCode::configuration,
                 "measure '" + std::string(to_string(s.id)) + "' requires a protected attribute", "protected");
        if (s.id == MeasureId::inference_time && !allow_inference_time)
            fail(ErrorCode::configuration, "inference_time must be enabled with allow_inference_time", "measures");
        if (s.id == MeasureId::robustness) s.robustness.validate();
        if (s.ale_bins < 2 || s.calibration_bins < 2)
            fail(ErrorCode::configuration, "bin counts must be >= 2", "measures");
        if (!(s.mec_tolerance > 0.0 && s.mec_tolerance <= 1.0))
            fail(ErrorCode::configuration, "mec tolerance must lie in (0, 1]", "measures");
        if (s.timing_repeats < 3) fail(ErrorCode::configuration, "timing repeats must be >= 3", "measures");
    }
}

EvalContext EvalContext::make(const gbt::BoostedModel& model, const Dataset& data, double thr, std::size_t n) {
    EvalContext ctx;
    ctx.model = &model;
    ctx.data = &data;
    ctx.margins = std::make_shared<const gbt::StagedMargins>(gbt::staged_margins(model, data));
    ctx.thr = thr;
    ctx.n = n;
    ctx.validate();
    return ctx;
}

EvalContext EvalContext::from_margins(const Dataset& data, std::vector<double> margins, double thr) {
    if (margins.size() != data.rows()) fail(ErrorCode::argument, "one margin per row is required");
    gbt::StagedMargins staged(1, margins.size());
    std::ranges::copy(margins, staged.mutable_at(1).begin());
    EvalContext ctx;
    ctx.data = &data;
    ctx.margins = std::make_shared<const gbt::StagedMargins>(std::move(staged));
    ctx.thr = thr;
    ctx.n = 1;
    ctx.validate();
    return ctx;
}

EvalContext EvalContext::with(std::size_t rounds, double threshold) const {
    EvalContext c = *this;
    c.n = rounds;
    c.thr = threshold;
    c.validate();
    return c;
}

void EvalContext::validate() const {
    if (data == nullptr || !margins) fail(ErrorCode::argument, "evaluation context lacks data or margins");
    if (margins->rows() != data->rows()) fail(ErrorCode::argument, "margin matrix does not match the data rows");
    if (model != nullptr && margins->rounds() != model->rounds_trained())
        fail(ErrorCode::argument, "margin matrix does not match the model's rounds");
    if (!(thr >= 0.0 && thr <= 1.0)) fail(ErrorCode::argument, "threshold must lie in [0, 1]", "thr");
    if (n < 1 || n > margins->rounds()) fail(ErrorCode::argument, "round count out of range", "n");
}

std::vector<std::uint8_t> EvalContext::hard_labels() const {
    auto m = current_margins();
    std::vector<std::uint8_t> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = hard_label(m[i], thr) ? 1 : 0;
    return out;
}

Confusion confusion(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predicted,
                    std::span<const std::uint8_t> groups, std::uint8_t group) {
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!groups.empty() && groups[i] != group) continue;
        if (labels[i]) {
            (predicted[i] ? c.tp : c.fn) += 1;
        } else {
            (predicted[i] ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

double mmce(const EvalContext& ctx) {
    ctx.validate();
    const auto& labels = ctx.data->labels;
    if (labels.empty()) fail(ErrorCode::input, "mmce on empty data");
    auto m = ctx.current_margins();
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) wrong += hard_label(m[i], ctx.thr) != (labels[i] == 1);
    return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double fairness_gap(const EvalContext& ctx, std::span<const std::uint8_t> groups, FairnessKind kind) {
    ctx.validate();
    require_groups(ctx, groups);
    const auto predicted = ctx.hard_labels();
    std::array<Confusion, 2> c{confusion(ctx.data->labels, predicted, groups, 0),
                               confusion(ctx.data->labels, predicted, groups, 1)};
    for (int g = 0; g < 2; ++g)
        if (c[g].tp + c[g].fp + c[g].tn + c[g].fn == 0)
            fail(ErrorCode::group_coverage, "group " + std::to_string(g) + " is absent from the evaluation data");
    switch (kind) {
        case FairnessKind::independence:
            return std::abs(rate(c[0].tp, c[0].tp + c[0].fn, "TPR", 0) - rate(c[1].tp, c[1].tp + c[1].fn, "TPR", 1));
        case FairnessKind::sufficiency: {
            const double fpr = std::abs(rate(c[0].fp, c[0].fp + c[0].tn, "FPR", 0) -
                                        rate(c[1].fp, c[1].fp + c[1].tn, "FPR", 1));
            const double fnr = std::abs(rate(c[0].fn, c[0].fn + c[0].tp, "FNR", 0) -
                                        rate(c[1].fn, c[1].fn + c[1].tp, "FNR", 1));
            return std::max(fpr, fnr);
        }
        case FairnessKind::f1:
            return std::abs(f1_score(c[0], 0) - f1_score(c[1], 1));
    }
    return 0.0;
}

double calibration_gap(const EvalContext& ctx, std::span<const std::uint8_t> groups, int bins) {
    ctx.validate();
    require_groups(ctx, groups);
    if (bins < 2) fail(ErrorCode::argument, "calibration needs at least 2 bins", "bins");
    const auto m = ctx.current_margins();
    const auto& labels = ctx.data->labels;
    std::array<double, 2> ece{};
    for (std::uint8_t g = 0; g < 2; ++g) {
        std::vector<double> proba_sum(static_cast<std::size_t>(bins), 0.0);
        std::vector<double> pos(static_cast<std::size_t>(bins), 0.0);
        std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
        std::size_t total = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (groups[i] != g) continue;
            const double p = gbt::sigmoid(m[i]);
            const auto b = std::min(static_cast<std::size_t>(p * bins), static_cast<std::size_t>(bins - 1));
            proba_sum[b] += p;
            pos[b] += labels[i];
            ++count[b];
            ++total;
        }
        if (total == 0)
            fail(ErrorCode::group_coverage, "group " + std::to_string(g) + " is absent from the evaluation data");
        double e = 0.0;
        for (std::size_t b = 0; b < count.size(); ++b) {
            if (count[b] == 0) continue;
            const double nb = static_cast<double>(count[b]);
            e += nb / static_cast<double>(total) * std::abs(proba_sum[b] / nb - pos[b] / nb);
        }
        ece[g] = e;
    }
    return std::abs(ece[0] - ece[1]);
}

Dataset perturb(const Dataset& data, double epsilon, Rng& rng) {
    Dataset out = data;
    for (auto& col : out.columns) {
        if (col.kind != ColumnKind::numeric || col.indicator) continue;
        const double sd = epsilon * (std::isnan(col.range()) ? 0.0 : col.range());
        for (auto& v : col.values) {
            const double z = rng.normal();
            if (!std::isnan(v)) v += sd * z;
        }
        col.recompute_range();
    }
    return out;
}

double robustness_perturbation(const EvalContext& ctx, const RobustnessConfig& cfg) {
    ctx.validate();
    const auto& model = require_model(ctx, "robustness");
    if (!has_numeric_feature(*ctx.data))
        fail(ErrorCode::not_applicable, "robustness needs at least one numeric feature");
    if (!(cfg.epsilon >= 0.0)) fail(ErrorCode::argument, "epsilon must be non-negative", "epsilon");
    if (cfg.repeats < 1) fail(ErrorCode::argument, "repeats must be >= 1", "repeats");
    Rng rng(cfg.seed);
    const auto clean = ctx.current_margins();
    double total = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
        const auto noisy = perturb(*ctx.data, cfg.epsilon, rng);
        const auto margins = gbt::predict_margin(model, noisy, ctx.n);
        total += accuracy_gap(ctx.data->labels, clean, margins, ctx.thr);
    }
    return total / cfg.repeats;
}

double sparsity(const EvalContext& ctx) {
    ctx.validate();
    const auto& model = require_model(ctx, "sparsity");
    const auto p = model.feature_map().sources.size();
    if (p == 0) return 0.0;
    return static_cast<double>(gbt::features_used(model, ctx.n).size()) / static_cast<double>(p);
}

double inference_time(const EvalContext& ctx, int repeats) {
    ctx.validate();
    const auto& model = require_model(ctx, "inference_time");
    if (repeats < 3) fail(ErrorCode::argument, "inference timing needs at least 3 repeats", "repeats");
    std::vector<double> ms;
    ms.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        auto p = gbt::predict_proba(model, *ctx.data, ctx.n);
        const auto stop = std::chrono::steady_clock::now();
        volatile double sink = p.empty() ? 0.0 : p.front();
        (void)sink;
        ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    std::ranges::nth_element(ms, ms.begin() + repeats / 2);
    const double median = ms[static_cast<std::size_t>(repeats / 2)];
    return median * 1000.0 / static_cast<double>(std::max<std::size_t>(1, ctx.data->rows()));
}

MeasureVector evaluate_all(std::span<const MeasureSpec> specs, const EvalContext& ctx,
                           std::optional<std::span<const std::uint8_t>> groups) {
    if (specs.empty()) fail(ErrorCode::configuration, "no measures requested", "measures");
    ctx.validate();
    auto need_groups = [&](const MeasureSpec& s) {
        if (!groups)
            fail(ErrorCode::configuration,
                 "measure '" + std::string(to_string(s.id)) + "' requires a protected attribute", "protected");
        return *groups;
    };
    MeasureVector out;
    out.reserve(specs.size());
    for (const auto& s : specs) {
        switch (s.id) {
            case MeasureId::mmce: out.push_back(mmce(ctx)); break;
            case MeasureId::f1_gap: out.push_back(fairness_gap(ctx, need_groups(s), FairnessKind::f1)); break;
            case MeasureId::tpr_gap: out.push_back(fairness_gap(ctx, need_groups(s), FairnessKind::independence)); break;
            case MeasureId::suff_gap: out.push_back(fairness_gap(ctx, need_groups(s), FairnessKind::sufficiency)); break;
            case MeasureId::calib_gap: out.push_back(calibration_gap(ctx, need_groups(s), s.calibration_bins)); break;
            case MeasureId::robustness: out.push_back(robustness_perturbation(ctx, s.robustness)); break;
            case MeasureId::sparsity: out.push_back(sparsity(ctx)); break;
            case MeasureId::interaction_strength:
                out.push_back(interaction_strength(require_model(ctx, "interaction_strength"), *ctx.data, ctx.n, s.ale_bins));
                break;
            case MeasureId::main_effect_complexity:
                out.push_back(main_effect_complexity(require_model(ctx, "main_effect_complexity"), *ctx.data, ctx.n,
                                                     s.ale_bins, s.mec_tolerance));
                break;
            case MeasureId::inference_time: out.push_back(inference_time(ctx, s.timing_repeats)); break;
        }
    }
    return out;
}

Evaluator::Evaluator(std::vector<MeasureSpec> specs, const gbt::BoostedModel& model, const Dataset& data)
    : specs_(std::move(specs)), model_(model), data_(data) {
    ctx_ = EvalContext::make(model, data, 0.5, model.rounds_trained());
}

double Evaluator::robustness_at(const MeasureSpec& spec, std::size_t n, double thr) {
    if (!has_numeric_feature(data_)) fail(ErrorCode::not_applicable, "robustness needs at least one numeric feature");
    if (perturbed_.empty()) {
        Rng rng(spec.robustness.seed);
        for (int r = 0; r < spec.robustness.repeats; ++r)
            perturbed_.push_back(std::make_shared<const gbt::StagedMargins>(
                gbt::staged_margins(model_, perturb(data_, spec.robustness.epsilon, rng))));
    }
    const auto clean = ctx_.margins->at(n);
    double total = 0.0;
    for (const auto& staged : perturbed_) total += accuracy_gap(data_.labels, clean, staged->at(n), thr);
    return total / static_cast<double>(perturbed_.size());
}

MeasureVector Evaluator::evaluate(std::size_t n, double thr) {
    const auto ctx = ctx_.with(n, thr);
    const std::optional<std::span<const std::uint8_t>> groups =
        data_.groups ? std::optional<std::span<const std::uint8_t>>(*data_.groups) : std::nullopt;
    MeasureVector out;
    out.reserve(specs_.size());
    for (const auto& s : specs_) {
        switch (s.id) {
            case MeasureId::robustness:
                out.push_back(robustness_at(s, n, thr));
                break;
            case MeasureId::sparsity:
            case MeasureId::interaction_strength:
            case MeasureId::main_effect_complexity:
            case MeasureId::inference_time: {
                const auto key = std::pair{n, s.id};
                auto it = per_round_.find(key);
                if (it == per_round_.end())
                    it = per_round_.emplace(key, evaluate_all(std::span(&s, 1), ctx, groups).front()).first;
                out.push_back(it->second);
                break;
            }
            default:
                out.push_back(evaluate_all(std::span(&s, 1), ctx, groups).front());
        }
    }
    return out;
}

}  // namespace axmc::measures
