#pragma once

#include <functional>
#include <string_view>

namespace simba {

enum class LogLevel { debug, info, warning, error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the sink (default: stderr for warning and above). Thread-safe.
void set_log_sink(LogSink sink);
void set_log_level(LogLevel level);

void log_message(LogLevel level, std::string_view message);

inline void log_warning(std::string_view message) { log_message(LogLevel::warning, message); }
inline void log_info(std::string_view message) { log_message(LogLevel::info, message); }

}  // namespace simba
