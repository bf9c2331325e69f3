#pragma once

#include <cstdint>

namespace hvcm {

// log [a]_b^c = log( a (a + b) ... (a + (c - 1) b) ).
// c == 0 is the empty product (returns 0). A non-positive factor yields -inf.
// Small c (< 32) or b <= 0 is summed term by term; otherwise log-gamma differences.
double log_rising(double a, double b, std::uint64_t c);

}  // namespace hvcm
