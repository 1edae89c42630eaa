#pragma once

#include <string>

// Minimal stderr logger. Verbosity comes from the ONESTEP_LOG environment
// variable ({error, info, debug}, default error); output files never depend
// on the log level.
namespace onestep::log {

enum class Level { error = 0, info = 1, debug = 2 };

Level threshold() noexcept;
void set_threshold(Level level) noexcept;

/// Parse ONESTEP_LOG and install the result; call once at startup.
void init_from_env();

void write(Level level, const std::string& msg);

inline void error(const std::string& msg) { write(Level::error, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void debug(const std::string& msg) { write(Level::debug, msg); }

}  // namespace onestep::log
