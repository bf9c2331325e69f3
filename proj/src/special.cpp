#include "hvcm/special.hpp"

#include <cmath>
#include <limits>

namespace hvcm {

namespace {
constexpr std::uint64_t kExplicitProductLimit = 32;
}

double log_rising(double a, double b, std::uint64_t c) {
  if (c == 0) return 0.0;
  if (c < kExplicitProductLimit || b <= 0.0) {
    double acc = 0.0;
    for (std::uint64_t i = 0; i < c; ++i) {
      const double term = a + static_cast<double>(i) * b;
      if (!(term > 0.0)) return -std::numeric_limits<double>::infinity();
      acc += std::log(term);
    }
    return acc;
  }
  if (!(a > 0.0)) return -std::numeric_limits<double>::infinity();
  const double ratio = a / b;
  const double cd = static_cast<double>(c);
  return cd * std::log(b) + std::lgamma(ratio + cd) - std::lgamma(ratio);
}

}  // namespace hvcm
