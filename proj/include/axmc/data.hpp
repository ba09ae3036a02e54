#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace axmc {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

/// Declares every CSV column, which one is the binary target and which (if any)
/// is the binary protected attribute.
struct Schema {
    std::vector<ColumnSpec> columns;
    std::string target;
    std::optional<std::string> protected_attribute;
    std::string positive_label = "1";
    /// The protected attribute is metadata only unless this is set.
    bool include_protected = false;

    /// Structural checks that do not need the data. Throws Error(schema).
    void validate() const;
    const ColumnSpec* find(std::string_view name) const;

    static Schema from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct CsvOptions {
    std::vector<std::string> missing_tokens{"", "NA", "?"};
    char delimiter = ',';
};

inline constexpr std::size_t max_categorical_levels = 1024;
inline constexpr const char* missing_level = "(missing)";

/// One feature column. Numeric columns keep NaN for missing cells; categorical
/// columns keep level codes into `levels` (sorted, with a dedicated missing
/// level when any cell was missing).
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::size_t source = 0;  // index into Dataset::sources
    bool indicator = false;  // one-hot column derived from a categorical source
    std::vector<double> values;
    std::vector<std::int32_t> codes;
    std::vector<std::string> levels;
    double min = 0.0;  // range over non-missing values; NaN when all missing
    double max = 0.0;

    double range() const { return max - min; }
    void recompute_range();
};

struct Dataset {
    Schema schema;
    std::vector<Column> columns;
    std::vector<std::string> sources;  // source feature names, before one-hot expansion
    std::vector<std::uint8_t> labels;
    std::optional<std::vector<std::uint8_t>> groups;
    std::vector<std::string> group_levels;  // level of group 0, level of group 1
    std::vector<std::size_t> row_ids;       // row positions in the ingested file

    std::size_t rows() const { return labels.size(); }
    std::size_t features() const { return columns.size(); }
    bool all_numeric() const;
    bool has_groups() const { return groups.has_value(); }

    /// Rows at `indices`, in the given order; ranges are recomputed.
    Dataset subset(std::span<const std::size_t> indices) const;

    /// Feature value; requires an all-numeric dataset.
    double at(std::size_t row, std::size_t col) const { return columns[col].values[row]; }
};

Dataset ingest_csv(const std::filesystem::path& path, const Schema& schema,
                   const CsvOptions& options = {});
Dataset ingest_csv_text(std::string_view text, const Schema& schema, const CsvOptions& options = {});

/// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter = ',');

/// Replaces every categorical column with one indicator column per level.
Dataset encode_categoricals(const Dataset& data);

struct SplitSpec {
    double train = 0.70;
    double valid = 0.15;
    double test = 0.15;
    std::uint64_t seed = 1;
    bool stratified = true;

    void validate() const;
    nlohmann::json to_json() const;
    static SplitSpec from_json(const nlohmann::json& j);
};

struct SplitIndices {
    std::vector<std::size_t> train, valid, test;
};

struct SplitResult {
    Dataset train, valid, test;
    std::vector<std::string> warnings;
};

/// Index sets are sorted ascending. Stratification apportions positives to the
/// splits by largest remainder, so each split is within one count of exact.
SplitIndices split_indices(std::span<const std::uint8_t> labels, const SplitSpec& spec);
SplitResult split(const Dataset& data, const SplitSpec& spec);

}  // namespace axmc
