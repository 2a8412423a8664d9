#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "claimcomb/errors.hpp"

namespace claimcomb::detail {

// Shortest round-trip decimal form; keeps emitted files byte-stable.
inline std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error::data("unparseable numeric value '" + std::string(s) + "' in " + context);
    }
    return v;
}

inline long parse_int(std::string_view s, const std::string& context) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error::data("unparseable integer value '" + std::string(s) + "' in " + context);
    }
    return v;
}

} // namespace claimcomb::detail
