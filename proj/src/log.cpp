#include "emd/log.hpp"

#include <cstdlib>
#include <iostream>

namespace emd {

namespace {

LogLevel parse_env() {
  const char* v = std::getenv("EMD_LOG");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

LogLevel g_threshold = parse_env();

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_threshold() { return g_threshold; }
void set_log_threshold(LogLevel level) { g_threshold = level; }

void log_line(LogLevel level, const std::string& msg) {
  std::cerr << "[" << level_tag(level) << "] " << msg << "\n";
}

}  // namespace emd
