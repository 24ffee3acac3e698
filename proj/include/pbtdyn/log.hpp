#pragma once

#include <string_view>

namespace pbtdyn {

/// Warnings go to std::clog unless silenced (tests silence them).
void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace pbtdyn
