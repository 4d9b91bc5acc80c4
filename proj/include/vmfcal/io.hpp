#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vmfcal {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Level read once from VMF_LOG_LEVEL (error|warn|info|debug), default warn.
LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
// Bit-exact hex-float representation for checkpoints.
std::string format_double_hex(double v);
double parse_double(std::string_view s);

// FNV-1a, used to stamp output tables with their generating config.
uint64_t fnv1a_hash(std::string_view s);

}  // namespace vmfcal
