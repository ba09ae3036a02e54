#include "axmc/data.hpp"

#include "axmc/error.hpp"
#include "axmc/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace axmc {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_missing(std::string_view cell, const CsvOptions& options) {
    const auto t = trim(cell);
    return std::ranges::any_of(options.missing_tokens, [&](const std::string& m) { return t == m; });
}

std::optional<double> parse_number(std::string_view cell) {
    const auto t = trim(cell);
    if (t.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = t.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

ColumnKind kind_from_string(const std::string& s) {
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "categorical") return ColumnKind::categorical;
    fail(ErrorCode::schema, "unknown column kind '" + s + "'", "kind");
}

}  // namespace

void Column::recompute_range() {
    if (kind != ColumnKind::numeric) {
        min = max = 0.0;
        return;
    }
    min = std::numeric_limits<double>::infinity();
    max = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isnan(v)) continue;
        min = std::min(min, v);
        max = std::max(max, v);
    }
    if (min > max) min = max = nan;
}

const ColumnSpec* Schema::find(std::string_view name) const {
    for (const auto& c : columns)
        if (c.name == name) return &c;
    return nullptr;
}

void Schema::validate() const {
    if (columns.empty()) fail(ErrorCode::schema, "schema declares no columns", "columns");
    std::set<std::string> seen;
    for (const auto& c : columns) {
        if (!seen.insert(c.name).second) fail(ErrorCode::schema, "duplicate column '" + c.name + "'", "columns");
    }
    if (find(target) == nullptr) fail(ErrorCode::schema, "target column '" + target + "' not declared", "target");
    if (protected_attribute) {
        const auto* p = find(*protected_attribute);
        if (p == nullptr)
            fail(ErrorCode::schema, "protected column '" + *protected_attribute + "' not declared", "protected");
        if (p->kind != ColumnKind::categorical)
            fail(ErrorCode::schema, "protected column must be categorical", "protected");
        if (*protected_attribute == target)
            fail(ErrorCode::schema, "target and protected column must differ", "protected");
    }
}

Schema Schema::from_json(const nlohmann::json& j) {
    Schema s;
    if (!j.is_object()) fail(ErrorCode::schema, "schema must be a JSON object");
    if (!j.contains("columns") || !j["columns"].is_array())
        fail(ErrorCode::schema, "schema.columns must be an array", "columns");
    for (const auto& c : j["columns"]) {
        if (!c.contains("name") || !c["name"].is_string())
            fail(ErrorCode::schema, "every column needs a string name", "columns");
        s.columns.push_back({c["name"].get<std::string>(),
                             kind_from_string(c.value("kind", std::string("numeric")))});
    }
    if (!j.contains("target") || !j["target"].is_string())
        fail(ErrorCode::schema, "schema.target must be a column name", "target");
    s.target = j["target"].get<std::string>();
    if (j.contains("protected") && !j["protected"].is_null())
        s.protected_attribute = j["protected"].get<std::string>();
    if (j.contains("positive_label")) {
        const auto& p = j["positive_label"];
        s.positive_label = p.is_string() ? p.get<std::string>() : p.dump();
    }
    s.include_protected = j.value("include_protected", false);
    s.validate();
    return s;
}

nlohmann::json Schema::to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns)
        cols.push_back({{"name", c.name}, {"kind", c.kind == ColumnKind::numeric ? "numeric" : "categorical"}});
    nlohmann::json j{{"columns", cols}, {"target", target}, {"positive_label", positive_label},
                     {"include_protected", include_protected}};
    j["protected"] = protected_attribute ? nlohmann::json(*protected_attribute) : nlohmann::json(nullptr);
    return j;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    if (text.starts_with("\xEF\xBB\xBF")) i = 3;

    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        // A bare empty line is not a record.
        if (!(record.size() == 1 && record[0].empty() && !field_started)) records.push_back(std::move(record));
        record.clear();
        field_started = false;
    };

    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
            field_started = true;
        } else if (c == delimiter) {
            record.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) fail(ErrorCode::parse, "unterminated quoted field at end of input");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

Dataset ingest_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "'", "data");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return ingest_csv_text(buffer.str(), schema, options);
}

Dataset ingest_csv_text(std::string_view text, const Schema& schema, const CsvOptions& options) {
    schema.validate();
    auto records = parse_csv(text, options.delimiter);
    if (records.empty()) fail(ErrorCode::input, "empty CSV input");

    const auto& header = records.front();
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name(trim(header[c]));
        if (!position.emplace(name, c).second) fail(ErrorCode::schema, "duplicate header '" + name + "'", name);
        if (schema.find(name) == nullptr) fail(ErrorCode::schema, "header column '" + name + "' not in schema", name);
    }
    for (const auto& spec : schema.columns)
        if (!position.contains(spec.name))
            fail(ErrorCode::schema, "schema column '" + spec.name + "' missing from header", spec.name);

    const std::size_t n = records.size() - 1;
    if (n == 0) fail(ErrorCode::input, "CSV has a header but no data rows");
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != header.size())
            fail(ErrorCode::parse, "row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                                       " fields, found " + std::to_string(records[r].size()));
    }

    Dataset data;
    data.schema = schema;
    data.row_ids.resize(n);
    for (std::size_t r = 0; r < n; ++r) data.row_ids[r] = r;

    // Target: exactly two distinct non-missing values, one of which is the positive label.
    {
        const std::size_t tc = position.at(schema.target);
        std::set<std::string> distinct;
        for (std::size_t r = 1; r <= n; ++r) {
            if (is_missing(records[r][tc], options))
                fail(ErrorCode::input, "row " + std::to_string(r) + ": missing target value", schema.target);
            distinct.emplace(trim(records[r][tc]));
        }
        if (distinct.size() != 2)
            fail(ErrorCode::schema,
                 "target column must have exactly 2 distinct values, found " + std::to_string(distinct.size()),
                 schema.target);
        if (!distinct.contains(schema.positive_label))
            fail(ErrorCode::schema, "positive label '" + schema.positive_label + "' not among target values",
                 schema.target);
        data.labels.resize(n);
        for (std::size_t r = 1; r <= n; ++r)
            data.labels[r - 1] = trim(records[r][tc]) == schema.positive_label ? 1 : 0;
    }

    if (schema.protected_attribute) {
        const auto& name = *schema.protected_attribute;
        const std::size_t pc = position.at(name);
        std::set<std::string> distinct;
        for (std::size_t r = 1; r <= n; ++r) {
            if (is_missing(records[r][pc], options))
                fail(ErrorCode::schema, "row " + std::to_string(r) + ": missing protected attribute", name);
            distinct.emplace(trim(records[r][pc]));
        }
        if (distinct.size() != 2)
            fail(ErrorCode::schema,
                 "protected column must have exactly 2 distinct values, found " + std::to_string(distinct.size()),
                 name);
        data.group_levels.assign(distinct.begin(), distinct.end());
        std::vector<std::uint8_t> groups(n);
        for (std::size_t r = 1; r <= n; ++r) groups[r - 1] = trim(records[r][pc]) == data.group_levels[1] ? 1 : 0;
        data.groups = std::move(groups);
    }

    for (const auto& spec : schema.columns) {
        if (spec.name == schema.target) continue;
        if (schema.protected_attribute && spec.name == *schema.protected_attribute && !schema.include_protected)
            continue;
        const std::size_t c = position.at(spec.name);
        Column col;
        col.name = spec.name;
        col.kind = spec.kind;
        col.source = data.sources.size();
        data.sources.push_back(spec.name);
        if (spec.kind == ColumnKind::numeric) {
            col.values.resize(n);
            for (std::size_t r = 1; r <= n; ++r) {
                const auto& cell = records[r][c];
                if (is_missing(cell, options)) {
                    col.values[r - 1] = nan;
                    continue;
                }
                auto v = parse_number(cell);
                if (!v)
                    fail(ErrorCode::parse, "row " + std::to_string(r) + ": column '" + spec.name +
                                               "' is not numeric: '" + cell + "'",
                         spec.name);
                col.values[r - 1] = *v;
            }
        } else {
            std::set<std::string> distinct;
            bool any_missing = false;
            for (std::size_t r = 1; r <= n; ++r) {
                if (is_missing(records[r][c], options))
                    any_missing = true;
                else
                    distinct.emplace(trim(records[r][c]));
            }
            col.levels.assign(distinct.begin(), distinct.end());
            if (any_missing) col.levels.emplace_back(missing_level);
            std::unordered_map<std::string, std::int32_t> code;
            for (std::size_t l = 0; l < col.levels.size(); ++l) code[col.levels[l]] = static_cast<std::int32_t>(l);
            col.codes.resize(n);
            for (std::size_t r = 1; r <= n; ++r) {
                const auto& cell = records[r][c];
                col.codes[r - 1] = is_missing(cell, options) ? code.at(missing_level) : code.at(std::string(trim(cell)));
            }
        }
        col.recompute_range();
        data.columns.push_back(std::move(col));
    }
    return data;
}

bool Dataset::all_numeric() const {
    return std::ranges::all_of(columns, [](const Column& c) { return c.kind == ColumnKind::numeric; });
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.schema = schema;
    out.sources = sources;
    out.group_levels = group_levels;
    out.labels.reserve(indices.size());
    out.row_ids.reserve(indices.size());
    for (auto i : indices) {
        if (i >= rows()) fail(ErrorCode::argument, "subset index out of range");
        out.labels.push_back(labels[i]);
        out.row_ids.push_back(row_ids[i]);
    }
    if (groups) {
        std::vector<std::uint8_t> g;
        g.reserve(indices.size());
        for (auto i : indices) g.push_back((*groups)[i]);
        out.groups = std::move(g);
    }
    out.columns.reserve(columns.size());
    for (const auto& col : columns) {
        Column c;
        c.name = col.name;
        c.kind = col.kind;
        c.source = col.source;
        c.indicator = col.indicator;
        c.levels = col.levels;
        if (!col.values.empty()) {
            c.values.reserve(indices.size());
            for (auto i : indices) c.values.push_back(col.values[i]);
        }
        if (!col.codes.empty()) {
            c.codes.reserve(indices.size());
            for (auto i : indices) c.codes.push_back(col.codes[i]);
        }
        c.recompute_range();
        out.columns.push_back(std::move(c));
    }
    return out;
}

Dataset encode_categoricals(const Dataset& data) {
    Dataset out = data;
    out.columns.clear();
    const std::size_t n = data.rows();
    for (const auto& col : data.columns) {
        if (col.kind == ColumnKind::numeric) {
            out.columns.push_back(col);
            continue;
        }
        if (col.levels.size() > max_categorical_levels)
            fail(ErrorCode::cardinality,
                 "column '" + col.name + "' has " + std::to_string(col.levels.size()) + " levels (limit " +
                     std::to_string(max_categorical_levels) + ")",
                 col.name);
        for (std::size_t l = 0; l < col.levels.size(); ++l) {
            Column ind;
            ind.name = col.name + "=" + col.levels[l];
            ind.kind = ColumnKind::numeric;
            ind.source = col.source;
            ind.indicator = true;
            ind.values.resize(n);
            for (std::size_t r = 0; r < n; ++r) ind.values[r] = col.codes[r] == static_cast<std::int32_t>(l) ? 1.0 : 0.0;
            ind.recompute_range();
            out.columns.push_back(std::move(ind));
        }
    }
    return out;
}

void SplitSpec::validate() const {
    for (double f : {train, valid, test})
        if (!(f > 0.0 && f < 1.0)) fail(ErrorCode::argument, "split fractions must lie in (0, 1)", "split");
    if (std::abs(train + valid + test - 1.0) > 1e-9)
        fail(ErrorCode::argument, "split fractions must sum to 1", "split");
}

nlohmann::json SplitSpec::to_json() const {
    return {{"train", train}, {"valid", valid}, {"test", test}, {"seed", seed}, {"stratified", stratified}};
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
    SplitSpec s;
    try {
        s.train = j.value("train", s.train);
        s.valid = j.value("valid", s.valid);
        s.test = j.value("test", s.test);
        s.seed = j.value("seed", s.seed);
        s.stratified = j.value("stratified", s.stratified);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::schema, std::string("malformed split spec: ") + e.what(), "split");
    }
    s.validate();
    return s;
}

SplitIndices split_indices(std::span<const std::uint8_t> labels, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = labels.size();
    if (n < 10) fail(ErrorCode::input, "need at least 10 rows to split, got " + std::to_string(n));
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
    const auto n_valid = static_cast<std::size_t>(std::llround(spec.valid * static_cast<double>(n)));
    if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n)
        fail(ErrorCode::input, "too few rows for three nonempty splits");
    const std::array<std::size_t, 3> sizes{n_train, n_valid, n - n_train - n_valid};

    Rng rng(spec.seed);
    std::array<std::vector<std::size_t>, 3> parts;
    if (!spec.stratified) {
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        shuffle(perm.begin(), perm.end(), rng);
        auto it = perm.begin();
        for (std::size_t s = 0; s < 3; ++s) {
            parts[s].assign(it, it + static_cast<std::ptrdiff_t>(sizes[s]));
            it += static_cast<std::ptrdiff_t>(sizes[s]);
        }
    } else {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(i);
        shuffle(pos.begin(), pos.end(), rng);
        shuffle(neg.begin(), neg.end(), rng);

        // Largest-remainder apportionment of the positives; negatives fill the rest.
        std::array<std::size_t, 3> pos_count{};
        std::array<double, 3> frac{};
        std::size_t assigned = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            const double quota = static_cast<double>(sizes[s]) * static_cast<double>(pos.size()) / static_cast<double>(n);
            pos_count[s] = static_cast<std::size_t>(std::floor(quota));
            frac[s] = quota - std::floor(quota);
            assigned += pos_count[s];
        }
        std::array<std::size_t, 3> order{0, 1, 2};
        std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
        for (std::size_t k = 0; assigned < pos.size(); ++k, ++assigned) ++pos_count[order[k % 3]];

        std::size_t pi = 0, ni = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < pos_count[s]; ++k) parts[s].push_back(pos[pi++]);
            for (std::size_t k = pos_count[s]; k < sizes[s]; ++k) parts[s].push_back(neg[ni++]);
        }
    }
    for (auto& p : parts) std::ranges::sort(p);
    return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

SplitResult split(const Dataset& data, const SplitSpec& spec) {
    auto idx = split_indices(data.labels, spec);
    SplitResult result{data.subset(idx.train), data.subset(idx.valid), data.subset(idx.test), {}};
    if (data.groups) {
        const std::array<std::pair<const char*, const Dataset*>, 3> named{
            {{"train", &result.train}, {"valid", &result.valid}, {"test", &result.test}}};
        for (const auto& [name, part] : named) {
            const auto& g = *part->groups;
            const bool has0 = std::ranges::find(g, 0) != g.end();
            const bool has1 = std::ranges::find(g, 1) != g.end();
            if (!has0 || !has1)
                result.warnings.push_back(std::string(name) + " split contains only one protected group");
        }
    }
    return result;
}

}  // namespace axmc
