#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cspath/constraints.hpp"
#include "json.hpp"

namespace cspath {

using Json = nlohmann::json;

// Shortest decimal text that round-trips the double; locale independent.
std::string format_number(double x);

Json complex_json(Complex z);
Json to_json(const PropagatorResult& r);
Json to_json(const ConvergenceStudy& study);

// {routes: {name: {amplitude_re, amplitude_im, error_estimate, normalized, ok, error?}}, deviations: [...], ...}
Json to_json(const EquivalenceReport& report);

// Left-aligned first column, right-aligned others, two spaces between columns.
std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);
std::string render_table(const EquivalenceReport& report);

// Comma-separated with a header row and LF line endings. Cells must not contain commas or newlines.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace cspath
