#pragma once
// Points of X_T = {1..T} x E and sparse kernels on time-ordered supports.

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace mbp {

/// (t, k^i): t in 1..T, mark index i 0-based (digit i+1).
struct Point {
    int t = 1;
    int k = 0;
    auto operator<=>(const Point&) const = default;
};

/// Strictly increasing times.
using Support = std::vector<Point>;

/// Kernel value per ordered support; absent entries are zero.
using Kernel = std::map<Support, double>;

bool is_ordered(const Support& s);
/// Throws std::invalid_argument on repeated or decreasing times.
void require_ordered(const Support& s);
/// "(t;i) (t';j)" with marks numbered from 1 like configuration digits.
std::string to_string(const Support& s);

}  // namespace mbp
