#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

namespace gossipguard {

// Locale-independent, platform-stable rendering used by every CSV writer.
inline std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", value == 0.0 ? 0.0 : value);
    return buf;
}

inline std::string format_real(const std::optional<double>& value, const char* missing = "undefined") {
    return value ? format_real(*value) : std::string(missing);
}

}  // namespace gossipguard
