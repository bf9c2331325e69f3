#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace hvcm {

// Seeded generator shared by every stochastic routine. All draws go through
// libstdc++ distributions so a fixed seed reproduces a run bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();           // [0, 1)
  double uniform_positive();  // (0, 1)
  bool bernoulli(double p);
  std::size_t uniform_index(std::size_t n);

  // Gamma(shape, rate).
  double gamma(double shape, double rate = 1.0);
  // log of a Gamma(shape, 1) variate; stays finite for shapes near zero.
  double log_gamma_variate(double shape);
  double beta(double a, double b);

  // Index drawn proportionally to non-negative weights. Throws if all are zero.
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Independent stream seed derived from a root seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace hvcm
