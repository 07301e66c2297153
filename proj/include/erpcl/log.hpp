#pragma once

#include <functional>
#include <string_view>

namespace erpcl::log {

enum class Level { debug, info, warn, error };

using Sink = std::function<void(Level, std::string_view)>;

// Replaces the process-wide sink; returns the previous one. The default writes
// warn and above to stderr.
Sink set_sink(Sink sink);
void set_min_level(Level level);

void write(Level level, std::string_view msg);

inline void debug(std::string_view msg) { write(Level::debug, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void error(std::string_view msg) { write(Level::error, msg); }

}  // namespace erpcl::log
