#pragma once

/// Small text-output helpers shared by the CSV emitters.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace illiq {

inline constexpr int kSchemaVersion = 1;

/// Round-trip-safe decimal form (17 significant digits).
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes each line prefixed with "# ".
inline void write_comment_header(std::ostream& os, const std::vector<std::string>& lines) {
    for (const auto& l : lines) os << "# " << l << '\n';
}

inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        if (ch == '\n') ch = ' ';
        out += ch;
    }
    return out + '"';
}

}  // namespace illiq
