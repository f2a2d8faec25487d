#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fragopt::csv {

/// Shortest decimal string that round-trips to the same double.
std::string num(double v);

/// Writes one comma-separated row.
void row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace fragopt::csv
