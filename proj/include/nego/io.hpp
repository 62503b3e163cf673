#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nego/minimax.hpp"

namespace nego {

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double v);

double parse_double(const std::string& text);
long parse_long(const std::string& text);

/// A negotiation snapshot on disk: the grid, one block of (share, utility)
/// samples per WM, and optionally an allocation to certify.
struct Instance {
    Grid grid;
    std::vector<SampleSet> samples;
    std::optional<Allocation> allocation;
};

void write_instance(std::ostream& out, const Instance& instance);

/// Parses the format written by write_instance; lines are `grid N`,
/// `wm <id>` followed by `<share> <utility>` pairs, and an optional
/// `allocation <shares...>`. `#` comments and blank lines are ignored.
Instance read_instance(std::istream& in);

} // namespace nego
