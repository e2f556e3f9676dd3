#pragma once

// Minimal leveled logging to stderr; level from OKB_CANON_LOG.

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace okbc::log {

enum class Level : int { error = 0, info = 1, debug = 2 };

inline Level& level() {
  static Level l = Level::info;
  return l;
}

// Unset means info. Returns false for an unrecognized value (level unchanged).
inline bool init_from_env() {
  const char* v = std::getenv("OKB_CANON_LOG");
  if (!v || !*v) return true;
  const std::string_view s(v);
  if (s == "error") level() = Level::error;
  else if (s == "info") level() = Level::info;
  else if (s == "debug") level() = Level::debug;
  else return false;
  return true;
}

inline void write(Level l, std::string_view tag, const std::string& msg) {
  if (static_cast<int>(l) <= static_cast<int>(level())) std::cerr << "[" << tag << "] " << msg << '\n';
}

inline void error(const std::string& msg) { write(Level::error, "error", msg); }
inline void info(const std::string& msg) { write(Level::info, "info", msg); }
inline void debug(const std::string& msg) { write(Level::debug, "debug", msg); }

}  // namespace okbc::log
