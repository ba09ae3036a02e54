#pragma once

#include "axmc/data.hpp"

#include <cstdint>
#include <string>

namespace axmc::synthetic {

struct Task {
    std::string csv;
    Schema schema;
};

/// Census-style binary task: 10 features (6 numeric, 4 categorical), a binary
/// protected attribute `sex`, and target `income`. `label_bias` is added to the
/// log-odds of rows with sex = Male. A few workclass cells are missing.
Task income_like(std::size_t n = 5000, std::uint64_t seed = 7, double label_bias = 0.8);

}  // namespace axmc::synthetic
