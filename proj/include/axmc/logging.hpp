#pragma once

#include <functional>
#include <string>

namespace axmc::log {

using Sink = std::function<void(const std::string&)>;

// Replaces the warning sink; an empty sink silences warnings. Default: stderr.
void set_warning_sink(Sink sink);
void warn(const std::string& message);

}  // namespace axmc::log
