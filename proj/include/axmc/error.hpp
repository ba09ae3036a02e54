#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace axmc {

enum class ErrorCode {
    parse,
    schema,
    input,
    cardinality,
    argument,
    degenerate_target,
    group_coverage,
    undefined_rate,
    not_applicable,
    degenerate_feature,
    configuration,
    insufficient_data,
    infeasible_box,
    status,
    restore,
    io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries one of the codes above.
/// `field` names the offending input (a JSON key, a CSV column) when known.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field = {})
        : std::runtime_error(message), code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message, std::string field = {}) {
    throw Error(code, message, std::move(field));
}

}  // namespace axmc
