#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hvcm/generative.hpp"
#include "hvcm/interaction.hpp"
#include "hvcm/params.hpp"
#include "hvcm/random.hpp"

namespace hvcm {

// Auxiliary vertex ("table") of one sender. A zero degree marks a free arena slot.
struct Table {
  ReceiverId label{};
  std::uint64_t degree = 0;

  bool operator==(const Table&) const = default;
};

// Candidate seats for an observation of receiver r by sender s: existing tables
// labelled r with weight d - alpha_s, and a fresh table with weight
// (theta_s + alpha_s V(s, .)) * G(r), G being the shared-urn label probability.
// Weights are not divided by m(s) + theta_s.
struct SeatWeights {
  std::vector<std::pair<std::uint32_t, double>> existing;
  double fresh = 0.0;

  double total() const;
};

struct LikelihoodParts {
  double receivers = 0.0;    // seating and label displays
  double senders = 0.0;      // sender urn, including within-record orderings
  double attribution = 0.0;  // sequential Z weights
  double sizes = 0.0;        // nu_{k1} and nu^{(Z)}_{k2}

  double total() const { return receivers + senders + attribution + sizes; }
};

class SeatingState {
 public:
  static constexpr std::uint32_t kUnseated = 0xffffffffu;

  SeatingState() = default;
  // Unseated state over `log` with the given attribution (one entry per record,
  // each a sender listed by that record).
  SeatingState(InteractionLog log, std::vector<SenderId> attribution);

  // Seats every observation in log order with its generative probabilities.
  static SeatingState sequential(InteractionLog log, std::vector<SenderId> attribution,
                                 const HvcmParams& params, Rng& rng);
  // Explicit configuration: seats[n][j] is the arena slot of observation (n, j)
  // within sender attribution[n]. Observations sharing a slot must share a label.
  static SeatingState from_assignments(InteractionLog log, std::vector<SenderId> attribution,
                                       const std::vector<std::vector<std::uint32_t>>& seats);

  const InteractionLog& log() const { return log_; }
  const std::vector<SenderId>& attribution() const { return attribution_; }
  SenderId attribution(std::size_t n) const { return attribution_.at(n); }
  const ZHistory& z_history() const { return z_history_; }

  std::size_t num_senders() const { return senders_.size(); }
  std::uint64_t grand_total() const { return grand_total_; }       // m_N
  std::size_t distinct_labels() const { return distinct_labels_; }  // K_N
  const std::vector<std::uint64_t>& label_tables() const { return label_tables_; }  // V(., r)
  std::uint64_t label_tables(ReceiverId r) const;
  std::uint64_t sender_total(SenderId s) const;   // m_N(s)
  std::uint64_t sender_tables(SenderId s) const;  // V_N(s, .)
  std::uint64_t latent(SenderId s, ReceiverId r) const;  // V_N(s, r)
  // Arena of sender s; slots with degree 0 are free.
  const std::vector<Table>& arena(SenderId s) const;
  std::uint32_t seat_of(std::size_t n, std::size_t j) const;
  std::size_t unseated() const { return unseated_; }

  SeatWeights seat_weights(SenderId s, ReceiverId r, const HvcmParams& params) const;

  // Frees observation (n, j); an emptied table is deleted. Throws if unseated.
  void remove(std::size_t n, std::size_t j);
  // Seats an unseated observation by its conditional seat probabilities and
  // returns the predictive probability of its receiver,
  // total seat weight / (m(s) + theta_s), evaluated before seating.
  double seat(std::size_t n, std::size_t j, const HvcmParams& params, Rng& rng);
  void reseat(std::size_t n, std::size_t j, const HvcmParams& params, Rng& rng);
  // Places an unseated observation at a given arena slot, or at a fresh table
  // when slot == kUnseated.
  void place(std::size_t n, std::size_t j, std::uint32_t slot);

  void remove_interaction(std::size_t n);
  // Changes Z_n; every observation of n must be unseated.
  void set_attribution(std::size_t n, SenderId s);

  // Throws Error describing the first violated count invariant.
  void audit() const;

  // Log of the extended likelihood. Throws if any observation is unseated.
  LikelihoodParts log_likelihood_parts(const HvcmParams& params) const;
  double log_likelihood(const HvcmParams& params) const {
    return log_likelihood_parts(params).total();
  }
  double receiver_log_likelihood(const HvcmParams& params) const;

  nlohmann::json to_json() const;
  static SeatingState from_json(const nlohmann::json& j);

  bool operator==(const SeatingState& other) const;

 private:
  struct SenderTables {
    std::vector<Table> arena;
    std::vector<std::uint32_t> free_slots;
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_label;
    std::uint64_t total = 0;
    std::uint64_t tables = 0;
  };

  std::size_t obs_index(std::size_t n, std::size_t j) const;
  SenderTables& sender_state(SenderId s);
  std::uint32_t open_table(SenderId s, ReceiverId r);
  void register_table(SenderId s, ReceiverId r, std::uint32_t slot);
  bool table_open(SenderId s, ReceiverId r, std::uint32_t slot) const;
  void close_table(SenderId s, std::uint32_t slot);

  InteractionLog log_;
  std::vector<SenderId> attribution_;
  ZHistory z_history_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> seats_;
  std::size_t unseated_ = 0;

  std::vector<SenderTables> senders_;
  std::vector<std::uint64_t> label_tables_;
  std::size_t distinct_labels_ = 0;
  std::uint64_t grand_total_ = 0;
};

// Draws an attribution for every record from the attribution urn in log order.
std::vector<SenderId> sample_attribution(const InteractionLog& log, const PitmanYor& z, Rng& rng);

// Sender-urn factor of the likelihood (sequential draws, all within-record
// orderings of each sender multiset).
double sender_log_likelihood(const InteractionLog& log, const PitmanYor& sender);
// Sequential attribution factor: product over records of the Z weight of Z_n
// normalised over the record's distinct senders.
double attribution_log_likelihood(const InteractionLog& log, std::span<const SenderId> attribution,
                                  const PitmanYor& z);
double size_log_likelihood(const InteractionLog& log, std::span<const SenderId> attribution,
                           const HvcmParams& params);

// Exact marginal probability of `log` under the extended model, summing over
// seatings of every (sender, label) group and every attribution of multi-sender
// records. Throws if the log has more than `max_slots` receiver slots.
double marginal_likelihood_bruteforce(const InteractionLog& log, const HvcmParams& params,
                                      std::size_t max_slots = 8);

}  // namespace hvcm
