#include "rere/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace rere::log {
namespace {

std::mutex sink_mutex;

Sink& current_sink() {
  static Sink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

}  // namespace

Sink set_warning_sink(Sink sink) {
  std::lock_guard lock(sink_mutex);
  return std::exchange(current_sink(), std::move(sink));
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex);
  if (current_sink()) current_sink()(message);
}

}  // namespace rere::log
