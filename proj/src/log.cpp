#include "onestep/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace onestep::log {

namespace {
std::atomic<Level> g_threshold{Level::error};
std::mutex g_mutex;

const char* tag(Level level) {
    switch (level) {
        case Level::error: return "error";
        case Level::info: return "info";
        case Level::debug: return "debug";
    }
    return "?";
}
}  // namespace

Level threshold() noexcept { return g_threshold.load(std::memory_order_relaxed); }

void set_threshold(Level level) noexcept {
    g_threshold.store(level, std::memory_order_relaxed);
}

void init_from_env() {
    const char* v = std::getenv("ONESTEP_LOG");
    if (!v) return;
    const std::string s(v);
    if (s == "error")
        set_threshold(Level::error);
    else if (s == "info")
        set_threshold(Level::info);
    else if (s == "debug")
        set_threshold(Level::debug);
    // anything else keeps the default rather than failing a batch run
}

void write(Level level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    std::lock_guard<std::mutex> hold(g_mutex);
    std::fprintf(stderr, "[onestep %s] %s\n", tag(level), msg.c_str());
}

}  // namespace onestep::log
