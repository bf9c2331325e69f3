#include "hvcm/random.hpp"

#include <cmath>
#include <limits>

#include "hvcm/error.hpp"

namespace hvcm {

double Rng::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double Rng::uniform_positive() {
  double u = 0.0;
  while (u == 0.0) u = uniform();
  return u;
}

bool Rng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw Error("uniform_index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw Error("gamma: shape and rate must be positive");
  return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
}

double Rng::log_gamma_variate(double shape) {
  if (!(shape > 0.0)) throw Error("log_gamma_variate: shape must be positive");
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(engine_));
  // G(a) = G(a + 1) * U^(1/a)
  const double boosted = std::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
  return std::log(boosted) + std::log(uniform_positive()) / shape;
}

double Rng::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("beta: parameters must be positive");
  const double la = log_gamma_variate(a);
  const double lb = log_gamma_variate(b);
  // a / (a + b) computed in log space
  return 1.0 / (1.0 + std::exp(lb - la));
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("categorical: weights have no positive mass");
  double u = uniform() * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace hvcm
