#pragma once

#include <array>
#include <vector>

namespace fairprice {

// Non-domination flags for points where lower is better on both axes.
// A point is dominated iff some other point is <= on both coordinates and
// strictly < on at least one; exact ties are mutually non-dominated.
std::vector<bool> nondominated_flags(const std::vector<std::array<double, 2>>& points);

}  // namespace fairprice
