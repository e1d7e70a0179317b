#include "iwatsuka/error.hpp"

#include <iostream>
#include <mutex>

namespace iwatsuka {
namespace {

std::mutex sink_mutex;
WarningSink& current_sink() {
  static WarningSink sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return sink;
}

}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex);
  current_sink() = std::move(sink);
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex);
  if (current_sink()) current_sink()(message);
}

}  // namespace iwatsuka
