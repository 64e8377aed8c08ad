#include "simba/log.hpp"

#include <iostream>
#include <mutex>

namespace simba {

namespace {

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

LogLevel g_level = LogLevel::warning;
LogSink g_sink;

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::debug: return "debug";
        case LogLevel::info: return "info";
        case LogLevel::warning: return "warning";
        case LogLevel::error: return "error";
    }
    return "?";
}

}  // namespace

void set_log_sink(LogSink sink) {
    std::lock_guard lock(log_mutex());
    g_sink = std::move(sink);
}

void set_log_level(LogLevel level) {
    std::lock_guard lock(log_mutex());
    g_level = level;
}

void log_message(LogLevel level, std::string_view message) {
    std::lock_guard lock(log_mutex());
    if (level < g_level) return;
    if (g_sink) {
        g_sink(level, message);
    } else {
        std::cerr << "simba " << level_tag(level) << ": " << message << '\n';
    }
}

}  // namespace simba
