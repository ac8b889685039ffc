#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace mixedflow::csv {

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace mixedflow::csv
