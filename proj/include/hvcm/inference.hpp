#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hvcm/interaction.hpp"
#include "hvcm/params.hpp"
#include "hvcm/random.hpp"
#include "hvcm/seating.hpp"

namespace hvcm {

// Gamma(shape, scale); mean shape * scale.
struct GammaPrior {
  double shape = 1.0;
  double scale = 1.0;

  double mean() const { return shape * scale; }
  bool operator==(const GammaPrior&) const = default;
};

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;

  double mean() const { return a / (a + b); }
  bool operator==(const BetaPrior&) const = default;
};

// Prior on alpha_s: tied to the global alpha through Beta(phi alpha, phi (1 - alpha)),
// or a fixed Beta shared by all senders.
struct LocalAlphaPrior {
  enum class Kind { Tied, Fixed };
  Kind kind = Kind::Tied;
  double phi = 10.0;
  BetaPrior fixed{};

  bool operator==(const LocalAlphaPrior&) const = default;
};

enum class PriorPreset { Conjugate, Enron, HollywoodFitted };

struct GibbsPriors {
  GammaPrior theta{1.0, 10000.0};
  BetaPrior alpha{1.0, 1.0};
  GammaPrior local_theta{1.0, 1000.0};
  std::map<SenderId, GammaPrior> local_theta_overrides;
  LocalAlphaPrior local_alpha{};
  // Priors for the sender urn, used when its parameters are estimated.
  GammaPrior sender_theta{1.0, 10000.0};
  BetaPrior sender_alpha{1.0, 1.0};
  // HollywoodFitted: local theta priors come from per-sender Hollywood fits.
  bool hollywood_local_theta = false;

  const GammaPrior& local_theta_for(SenderId s) const;
  void validate() const;
};

GibbsPriors default_priors(PriorPreset preset);
// Gamma(theta_hat / 100, 100): mean theta_hat with a spread proportional to it.
GammaPrior hollywood_theta_prior(double theta_hat);

// Sufficient statistics of one auxiliary-variable sweep over a Pitman-Yor urn.
struct AuxiliaryDraws {
  double log_x = 0.0;         // log x; 0 when the draw is skipped
  std::uint64_t y_ones = 0;   // sum of y_i
  std::uint64_t y_count = 0;  // number of y_i
  std::uint64_t z_zeros = 0;  // sum of (1 - z_j)
  std::uint64_t z_count = 0;  // number of z_j
};

// Auxiliary draws for a Pitman-Yor urn with per-item counts `counts` (zeros ignored):
// x ~ Beta(theta + 1, N - 1), y_i ~ Bernoulli(theta / (theta + alpha i)) for
// i = 1..K-1, and z_j ~ Bernoulli((j - 1) / (j - alpha)) for j = 1..n_k - 1 per item.
AuxiliaryDraws draw_auxiliary(std::span<const std::uint64_t> counts, const PitmanYor& py, Rng& rng);
// theta ~ Gamma(shape + sum y, rate 1/scale - log x).
double sample_concentration(const AuxiliaryDraws& aux, const GammaPrior& prior, Rng& rng);
// alpha ~ Beta(a + sum (1 - y), b + sum (1 - z)).
double sample_discount(const AuxiliaryDraws& aux, const BetaPrior& prior, Rng& rng);

struct IterationSummary {
  AuxiliaryDraws global;
  std::size_t senders_updated = 0;
};

// One sweep: reseat every observation, then global auxiliaries and (theta, alpha),
// then per-sender auxiliaries and (theta_s, alpha_s) for every sender id.
IterationSummary gibbs_iteration(SeatingState& state, HvcmParams& params,
                                 const GibbsPriors& priors, Rng& rng);

struct ZPosterior {
  SenderId chosen{};
  std::vector<SenderId> candidates;  // distinct senders of the interaction
  std::vector<double> probabilities;
};

// Resamples Z_i: each candidate's receiver likelihood is estimated from n_mc
// sequential seatings, weighted by the attribution-urn weight excluding i and
// the candidate's receiver-count probability.
// Interaction i ends reseated under the chosen sender.
ZPosterior sample_z_posterior(SeatingState& state, std::size_t i, const HvcmParams& params,
                              Rng& rng, std::size_t n_mc);

struct FitConfig {
  std::size_t iterations = 1000;
  std::size_t burn_in = 500;
  std::uint64_t seed = 0;
  std::size_t z_mc_samples = 25;
  std::size_t z_every = 1;
  bool sample_sender_params = false;
  PitmanYor initial_global{0.5, 10.0};
  PitmanYor initial_local{0.5, 1.0};
  std::optional<PitmanYor> sender_params;  // fixed sender urn; fitted when absent
  std::optional<PitmanYor> z_params;       // attribution urn; sender urn when absent

  void validate() const;
};

struct TraceRecord {
  std::size_t iteration = 0;
  PitmanYor global;
  PitmanYor sender;
  double log_likelihood = 0.0;
  std::size_t labels = 0;        // K_N
  std::uint64_t tables = 0;      // m_N
};

struct GibbsTrace {
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::vector<TraceRecord> records;
  std::vector<std::vector<PitmanYor>> local;  // local[t][s] by sender id
  PitmanYor z;
  Categorical sender_size;
  Categorical receiver_size;
  std::vector<std::size_t> multi_sender;               // interaction indices with k1 > 1
  std::vector<std::vector<SenderId>> z_candidates;     // per multi-sender interaction
  std::vector<std::vector<SenderId>> z_samples;        // z_samples[t][k]
  std::vector<std::vector<double>> z_posterior_mean;   // post-burn-in mean probabilities
  std::vector<SenderId> final_attribution;

  std::size_t size() const { return records.size(); }
  HvcmParams params_at(std::size_t t) const;
  // Post-burn-in means of the global and per-sender parameters.
  PitmanYor mean_global() const;
  std::vector<PitmanYor> mean_local() const;
};

// Runs the sampler on `log`. Deterministic for a fixed seed.
GibbsTrace fit(const InteractionLog& log, const GibbsPriors& priors, const FitConfig& config);

// Posterior means of a flat Pitman-Yor urn given per-item counts, using the
// global-level auxiliary updates only. With at most one draw, the prior means.
PitmanYor hollywood_fit(std::span<const std::uint64_t> counts, const GammaPrior& theta_prior,
                        const BetaPrior& alpha_prior, std::size_t iterations,
                        std::size_t burn_in, Rng& rng);

// Slot counts by constituent id: every sender and receiver slot of a
// shared-population log, or the sender slots of a two-population log.
std::vector<std::uint64_t> flat_counts(const InteractionLog& log);
std::vector<std::uint64_t> sender_counts(const InteractionLog& log);
// Receiver counts over the interactions that list s.
std::vector<std::uint64_t> local_receiver_counts(const InteractionLog& log, SenderId s);

// Sets a Gamma(theta_hat / 100, 100) local theta prior for every sender from a
// Hollywood fit of its local receiver counts.
void apply_hollywood_priors(GibbsPriors& priors, const InteractionLog& log, std::size_t iterations,
                            std::size_t burn_in, Rng& rng);

}  // namespace hvcm
