#include "ctflow/cli/format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#ifndef CTFLOW_VERSION
#define CTFLOW_VERSION "0.0.0"
#endif

namespace ctflow::cli {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 12);
    return std::string(buf, res.ptr);
}

double rounded(double v) {
    if (!std::isfinite(v)) return v;
    const std::string s = format_double(v);
    double out = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string tool_version() { return CTFLOW_VERSION; }

std::string provenance_line(const RunConfig& config) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_config(config))));
    return "# ctflow " + tool_version() + " config-fnv1a=" + hex;
}

nlohmann::json provenance_json(const RunConfig& config) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_config(config))));
    return {{"tool", "ctflow"}, {"version", tool_version()}, {"config_fnv1a", hex}};
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

void write_csv_row(std::ostream& out, const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << format_double(cells[i]);
    }
    out << '\n';
}

}  // namespace ctflow::cli
