#pragma once

#include <sstream>
#include <string>

namespace emd {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold comes from the EMD_LOG environment variable
// (error|warn|info|debug); default info.
LogLevel log_threshold();
void set_log_threshold(LogLevel level);
void log_line(LogLevel level, const std::string& msg);

#define EMD_LOG_AT(level, expr)                                  \
  do {                                                           \
    if (static_cast<int>(level) <= static_cast<int>(::emd::log_threshold())) { \
      std::ostringstream emd_log_oss_;                           \
      emd_log_oss_ << expr;                                      \
      ::emd::log_line(level, emd_log_oss_.str());                \
    }                                                            \
  } while (0)

#define EMD_ERROR(expr) EMD_LOG_AT(::emd::LogLevel::Error, expr)
#define EMD_WARN(expr) EMD_LOG_AT(::emd::LogLevel::Warn, expr)
#define EMD_INFO(expr) EMD_LOG_AT(::emd::LogLevel::Info, expr)
#define EMD_DEBUG(expr) EMD_LOG_AT(::emd::LogLevel::Debug, expr)

}  // namespace emd
