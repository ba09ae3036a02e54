#pragma once

#include "axmc/data.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace axmc::testing {

// All-numeric dataset built straight from columns; column i is named x<i>.
inline Dataset make_numeric(const std::vector<std::vector<double>>& columns, std::vector<std::uint8_t> labels,
                            std::optional<std::vector<std::uint8_t>> groups = std::nullopt) {
    Dataset d;
    d.labels = std::move(labels);
    for (std::size_t r = 0; r < d.labels.size(); ++r) d.row_ids.push_back(r);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        Column col;
        col.name = "x" + std::to_string(c);
        col.source = c;
        col.values = columns[c];
        col.recompute_range();
        d.columns.push_back(std::move(col));
        d.sources.push_back(d.columns.back().name);
        d.schema.columns.push_back({d.columns.back().name, ColumnKind::numeric});
    }
    d.schema.columns.push_back({"y", ColumnKind::numeric});
    d.schema.target = "y";
    if (groups) {
        d.groups = std::move(groups);
        d.group_levels = {"a", "b"};
    }
    return d;
}

}  // namespace axmc::testing
