#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace imbf {

// Shortest decimal form that parses back to the same double. Used for every
// file we promise to be byte-deterministic.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int digits) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace imbf
