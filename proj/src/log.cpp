#include "pbtdyn/log.hpp"

#include <atomic>
#include <iostream>

namespace pbtdyn {

namespace {
std::atomic<bool> g_warnings{true};
}

void log_warning(std::string_view message) {
  if (g_warnings.load(std::memory_order_relaxed)) {
    std::clog << "[pbtdyn] warning: " << message << '\n';
  }
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

}  // namespace pbtdyn
