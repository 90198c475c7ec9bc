#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctflow/cli/config.hpp"

namespace ctflow::cli {

// %.12e, locale independent; nan and inf spelled out.
std::string format_double(double v);

// Value as it would read back from format_double, for JSON emission.
double rounded(double v);

std::uint64_t fnv1a64(const std::string& bytes);

std::string tool_version();

// "# ctflow <version> config-fnv1a=<16 hex digits>"
std::string provenance_line(const RunConfig& config);

nlohmann::json provenance_json(const RunConfig& config);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);
void write_csv_row(std::ostream& out, const std::vector<double>& cells);

}  // namespace ctflow::cli
