#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hvcm/interaction.hpp"
#include "hvcm/params.hpp"
#include "hvcm/random.hpp"

namespace hvcm {

// Attribution history D^(z)(s) of the Z process.
struct ZHistory {
  std::vector<std::uint64_t> count;
  std::size_t distinct = 0;
  std::uint64_t total = 0;

  std::uint64_t of(SenderId s) const { return index(s) < count.size() ? count[index(s)] : 0; }
  void add(SenderId s);
  void remove(SenderId s);

  bool operator==(const ZHistory&) const = default;
};

// Latent degrees V(s, r) and their totals, plus the sampling indices that make
// each receiver draw O(1).
struct LatentDegreeState {
  std::unordered_map<std::uint64_t, std::uint64_t> latent;  // V(s, r) by pair_key
  std::vector<std::uint64_t> receiver_total;                // V(., r)
  std::vector<std::uint64_t> sender_tables;                 // V(s, .)
  std::uint64_t grand_total = 0;                            // m
  std::size_t distinct_labels = 0;                          // K
  ZHistory z_history;

  // Receivers of every escaped draw and every non-escaped draw, per sender.
  std::vector<std::vector<ReceiverId>> escaped_draws;
  std::vector<std::vector<ReceiverId>> joined_draws;
  // Labels in first-use order, and one entry per label use beyond the first.
  std::vector<ReceiverId> labels;
  std::vector<ReceiverId> repeat_labels;

  std::uint64_t latent_of(SenderId s, ReceiverId r) const;
  std::uint64_t label_total(ReceiverId r) const;
  std::uint64_t tables_of(SenderId s) const;

  // Applies one draw: an escape adds an auxiliary vertex (V(s,r), V(., r), m += 1).
  void record(SenderId s, ReceiverId r, bool escaped);
};

struct SenderDraw {
  SenderId id;
  bool is_new;
};

struct ReceiverDraw {
  ReceiverId id;
  bool escaped;
  bool is_new;
};

// Existing sender s with weight D^out(s) - alpha~, an unseen one with
// theta~ + alpha~ |S|; normalizer (sender slots + theta~).
SenderDraw sample_sender(const HistoryState& hist, const HvcmParams& params, Rng& rng);
double sender_probability(const HistoryState& hist, const HvcmParams& params,
                          std::optional<SenderId> s);  // nullopt = unseen sender

// Receiver for sender s. The escaped flag reports whether the draw went through
// the shared urn (opening a new auxiliary vertex).
ReceiverDraw sample_receiver(const HistoryState& hist, const LatentDegreeState& lat, SenderId s,
                             const HvcmParams& params, Rng& rng);
// Predictive probability of receiver r (nullopt = a receiver never seen globally).
double receiver_probability(const HistoryState& hist, const LatentDegreeState& lat, SenderId s,
                            std::optional<ReceiverId> r, const HvcmParams& params);

// tau(s) = (theta_s + alpha_s V(s, .)) / (m(s) + theta_s).
double escape_probability(const HistoryState& hist, const LatentDegreeState& lat, SenderId s,
                          const HvcmParams& params);

// Updates latent degrees after (s, r) was drawn; `hist` is the pre-draw history.
// A first local occurrence always sets V(s, r) to 1. Otherwise a known escape flag
// is applied as is; an unknown one is drawn with probability tau(s).
void update_latent(LatentDegreeState& lat, const HistoryState& hist, SenderId s, ReceiverId r,
                   const HvcmParams& params, std::optional<bool> escaped, Rng& rng);

// Attribution weights over the distinct senders of an interaction (membership
// semantics for repeated senders), in the order given.
std::vector<double> z_weights(const ZHistory& hz, std::span<const SenderId> distinct_senders,
                              const PitmanYor& z);
// Draws Z from the sender multiset and records it in `hz`.
SenderId sample_z(ZHistory& hz, std::span<const SenderId> senders, const PitmanYor& z, Rng& rng);

struct SimulatedLog {
  InteractionLog log;
  std::vector<SenderId> attribution;  // Z_n for every interaction
  LatentDegreeState latent;
};

// Forward simulation of n interactions of the sequential process.
SimulatedLog simulate(std::size_t n, const HvcmParams& params, Rng& rng);

// Receiver draws only, given sender multisets and receiver counts. Sender ids are
// named "s<id+1>". A non-empty attribution fixes Z; otherwise it is drawn.
SimulatedLog simulate_conditional(std::span<const std::vector<SenderId>> senders,
                                  std::span<const std::size_t> sizes, const HvcmParams& params,
                                  Rng& rng, std::span<const SenderId> attribution = {});
// Same, reusing the senders, receiver counts and sender vocabulary of `observed`.
SimulatedLog simulate_conditional(const InteractionLog& observed, const HvcmParams& params,
                                  Rng& rng, std::span<const SenderId> attribution = {});

struct StickTruncation {
  std::size_t sticks = 1;                      // minimum number of sticks
  std::optional<double> tail_tolerance{1e-6};  // extend until the tail is below this
  std::size_t max_sticks = 2'000'000;
};

// Paintbox frequencies for the alpha_s = 0 model. local[s][r] is f_{r|s} for the
// first sender.size() senders.
struct PaintboxWeights {
  std::vector<double> sender;
  double sender_tail = 1.0;
  std::vector<double> global;
  double global_tail = 1.0;
  std::vector<std::vector<double>> local;
  std::vector<double> local_tail;
};

// Local frequencies f_{r|s} perturbing fixed global sticks with
// Beta(theta_s pi_r, theta_s (1 - sum_{l <= r} pi_l)); `tail` receives the mass left.
std::vector<double> local_frequencies(std::span<const double> global, double global_tail,
                                      double theta_s, Rng& rng, double& tail);

// Sticks beta_s ~ Beta(1 - alpha~, theta~ + s alpha~) for senders, global
// Beta(1 - alpha, theta + r alpha), and local perturbations
// Beta(theta_s pi_r, theta_s (1 - sum_{l <= r} pi_l)).
PaintboxWeights stick_breaking_frequencies(const HvcmParams& params, StickTruncation truncation,
                                           Rng& rng);

// Flat baseline: every constituent slot (one sender, then the receivers) drawn from
// a single Pitman-Yor urn over a shared population.
InteractionLog hollywood_simulate(std::size_t n, const PitmanYor& urn,
                                  const Categorical& receivers_per_interaction, Rng& rng);

}  // namespace hvcm
