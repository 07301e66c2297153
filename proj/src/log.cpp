#include "erpcl/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace erpcl::log {
namespace {

std::mutex g_mutex;
std::atomic<Level> g_min_level{Level::warn};

const char* level_name(Level level) {
  switch (level) {
    case Level::debug:
      return "debug";
    case Level::info:
      return "info";
    case Level::warn:
      return "warn";
    case Level::error:
      return "error";
  }
  return "?";
}

void default_sink(Level level, std::string_view msg) {
  std::cerr << "[" << level_name(level) << "] " << msg << '\n';
}

Sink& sink_ref() {
  static Sink sink = default_sink;
  return sink;
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  Sink previous = std::move(sink_ref());
  sink_ref() = sink ? std::move(sink) : Sink(default_sink);
  return previous;
}

void set_min_level(Level level) { g_min_level.store(level); }

void write(Level level, std::string_view msg) {
  if (level < g_min_level.load()) return;
  std::lock_guard lock(g_mutex);
  sink_ref()(level, msg);
}

}  // namespace erpcl::log
