#include "axmc/error.hpp"
#include "axmc/io.hpp"
#include "axmc/logging.hpp"
#include "axmc/rng.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

namespace axmc {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::parse: return "parse_error";
        case ErrorCode::schema: return "schema_error";
        case ErrorCode::input: return "input_error";
        case ErrorCode::cardinality: return "cardinality_error";
        case ErrorCode::argument: return "argument_error";
        case ErrorCode::degenerate_target: return "degenerate_target";
        case ErrorCode::group_coverage: return "group_coverage";
        case ErrorCode::undefined_rate: return "undefined_rate";
        case ErrorCode::not_applicable: return "not_applicable";
        case ErrorCode::degenerate_feature: return "degenerate_feature";
        case ErrorCode::configuration: return "configuration_error";
        case ErrorCode::insufficient_data: return "insufficient_data";
        case ErrorCode::infeasible_box: return "infeasible_box";
        case ErrorCode::status: return "status_error";
        case ErrorCode::restore: return "restore_error";
        case ErrorCode::io: return "io_error";
    }
    return "error";
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) fail(ErrorCode::argument, "Rng::below requires n > 0");
    // Rejection on the top multiple of n keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::save() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::load(const std::string& state) {
    std::istringstream in(state);
    std::mt19937_64 engine;
    in >> engine;
    if (in.fail()) fail(ErrorCode::restore, "malformed rng state");
    engine_ = engine;
}

namespace log {
namespace {
std::mutex sink_mutex;
Sink& sink() {
    static Sink s = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
    return s;
}
}  // namespace

void set_warning_sink(Sink s) {
    std::lock_guard lock(sink_mutex);
    sink() = std::move(s);
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex);
    if (sink()) sink()(message);
}
}  // namespace log

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorCode::io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void append_line(const std::filesystem::path& path, std::string_view line) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) fail(ErrorCode::io, "cannot append to " + path.string());
    out << line << '\n';
    out.flush();
}

}  // namespace axmc
