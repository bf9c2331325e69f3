#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "hvcm/interaction.hpp"
#include "hvcm/random.hpp"

namespace hvcm {

// Discount and concentration of one Pitman-Yor urn.
struct PitmanYor {
  double discount = 0.5;
  double concentration = 1.0;

  bool operator==(const PitmanYor&) const = default;
};

// Size of the finite population implied by a negative discount (theta = -K alpha),
// or nullopt for an infinite population.
std::optional<std::size_t> finite_population(const PitmanYor& py);

// Urn over a population that may be finite: 0 <= alpha < 1, theta > 0; or
// alpha < 0 with theta = -K alpha for a positive integer K.
void validate_population_urn(const PitmanYor& py, const char* what);
// Global receiver urn: as above but theta > -alpha suffices in the infinite case.
void validate_global_urn(const PitmanYor& py);
// Per-sender urn: 0 <= alpha <= 1 and theta > 0.
void validate_local_urn(const PitmanYor& py);

// Categorical distribution over sizes 1, 2, ...; probs[k - 1] = P(size = k).
struct Categorical {
  std::vector<double> probs{1.0};

  static Categorical degenerate(std::size_t k);
  static Categorical uniform(std::size_t lo, std::size_t hi);
  // Normalized empirical frequencies; counts[k - 1] = number of observations of size k.
  static Categorical empirical(const std::vector<std::uint64_t>& counts);

  double prob(std::size_t k) const;
  std::size_t sample(Rng& rng) const;
  std::size_t max_size() const { return probs.size(); }
  void validate() const;

  bool operator==(const Categorical&) const = default;
};

// All model parameters. Senders without an explicit entry use the defaults.
struct HvcmParams {
  PitmanYor sender{0.5, 1.0};  // sender urn
  PitmanYor global{0.5, 1.0};  // shared receiver urn
  std::map<SenderId, PitmanYor> local;
  PitmanYor default_local{0.5, 1.0};
  PitmanYor z{0.5, 1.0};  // attribution urn for multi-sender interactions
  Categorical sender_size;
  std::map<SenderId, Categorical> receiver_size;
  Categorical default_receiver_size;

  const PitmanYor& local_for(SenderId s) const;
  const Categorical& receiver_size_for(SenderId s) const;
  void validate() const;
};

}  // namespace hvcm
