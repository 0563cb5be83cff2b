#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace orbiflow {

using Rational = boost::rational<long long>;

// Error kinds map one-to-one onto CLI exit codes (see tools/orbiflow.cpp).
struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int ln = 0, int col = 0)
        : std::runtime_error(ln > 0 ? ("line " + std::to_string(ln) + ":" + std::to_string(col) + ": " + msg) : msg),
          line(ln),
          column(col) {}
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string to_string(const Rational& q) {
    if (q.denominator() == 1) return std::to_string(q.numerator());
    return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

inline std::string join_ints(const std::vector<int>& v, std::string_view sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline int parse_int(std::string_view s, const char* what) {
    std::string t = trim(s);
    if (t.empty()) throw ParseError(std::string("empty ") + what);
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " '" + t + "'");
    }
    if (pos != t.size()) throw ParseError(std::string("bad ") + what + " '" + t + "'");
    if (v > 1000000000LL || v < -1000000000LL) throw ParseError(std::string(what) + " out of range");
    return static_cast<int>(v);
}

inline std::vector<int> parse_int_list(std::string_view s, const char* what) {
    std::vector<int> out;
    if (trim(s).empty()) return out;
    for (auto& part : split(s, ',')) out.push_back(parse_int(part, what));
    return out;
}

// FNV-1a, used for snapshot integrity checks.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace orbiflow
