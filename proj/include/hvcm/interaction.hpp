#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hvcm {

// Dense integer ids assigned at ingestion. Names live only in the vocabularies.
enum class SenderId : std::uint32_t {};
enum class ReceiverId : std::uint32_t {};

constexpr std::uint32_t index(SenderId s) { return static_cast<std::uint32_t>(s); }
constexpr std::uint32_t index(ReceiverId r) { return static_cast<std::uint32_t>(r); }
constexpr SenderId sender_id(std::uint32_t i) { return static_cast<SenderId>(i); }
constexpr ReceiverId receiver_id(std::uint32_t i) { return static_cast<ReceiverId>(i); }

// Packs a (sender, receiver) pair into one hashable key.
constexpr std::uint64_t pair_key(SenderId s, ReceiverId r) {
  return (static_cast<std::uint64_t>(index(s)) << 32) | index(r);
}

class Vocabulary {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// One structured interaction: a sender multiset (stored sorted) and receivers in
// draw order. Receivers compare as a multiset under canonical comparison.
struct Interaction {
  std::vector<SenderId> senders;
  std::vector<ReceiverId> receivers;

  std::vector<SenderId> distinct_senders() const;
  bool lists_sender(SenderId s) const;
  bool canonically_equal(const Interaction& other) const;
  bool operator==(const Interaction&) const = default;
};

class InteractionLog {
 public:
  explicit InteractionLog(bool shared_population = false) : shared_(shared_population) {}

  SenderId intern_sender(std::string_view name);
  ReceiverId intern_receiver(std::string_view name);

  // Validates ids and non-emptiness; the sender list is sorted into multiset form.
  void append(std::vector<SenderId> senders, std::vector<ReceiverId> receivers);
  void append_named(std::span<const std::string> senders, std::span<const std::string> receivers);

  const std::vector<Interaction>& records() const { return records_; }
  const Interaction& operator[](std::size_t n) const { return records_[n]; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool shared_population() const { return shared_; }
  const Vocabulary& sender_vocab() const { return senders_; }
  const Vocabulary& receiver_vocab() const { return shared_ ? senders_ : receivers_; }
  std::size_t num_sender_ids() const { return senders_.size(); }
  std::size_t num_receiver_ids() const { return receiver_vocab().size(); }
  const std::string& sender_name(SenderId s) const { return senders_.name(index(s)); }
  const std::string& receiver_name(ReceiverId r) const { return receiver_vocab().name(index(r)); }

  std::size_t total_receiver_slots() const;
  std::size_t total_sender_slots() const;
  bool has_multi_sender() const;

  bool operator==(const InteractionLog& other) const;

 private:
  bool shared_;
  Vocabulary senders_;
  Vocabulary receivers_;
  std::vector<Interaction> records_;
};

// Relabels constituents by order of first appearance (jointly when the
// populations are shared). Two logs related by a constituent bijection map to
// identical canonical forms; names become "1", "2", ...
InteractionLog canonicalize(const InteractionLog& log);

// Sub-log of the selected interactions (strictly increasing 0-based indices).
// Vocabularies are pruned to referenced ids, preserving relative id order.
InteractionLog restrict_log(const InteractionLog& log, std::span<const std::size_t> indices);

// Observable running statistics after a prefix of the log.
struct HistoryState {
  std::vector<std::uint64_t> out_degree;                      // D^out(s), by sender id
  std::unordered_map<std::uint64_t, std::uint64_t> local_in_degree;  // D(s, r), keyed by pair_key
  std::vector<std::uint64_t> local_total;                     // m(s)
  std::vector<std::uint8_t> receiver_seen;                    // r in R_{n,j}
  std::size_t num_senders_seen = 0;                           // |S_n|
  std::size_t num_receivers_seen = 0;                         // K_{n,j}
  std::uint64_t interactions = 0;
  std::uint64_t sender_slots = 0;
  std::uint64_t receiver_slots = 0;

  std::uint64_t out(SenderId s) const;
  std::uint64_t in_degree(SenderId s, ReceiverId r) const;
  std::uint64_t total(SenderId s) const;
  bool seen(ReceiverId r) const;
  bool seen_locally(SenderId s, ReceiverId r) const { return in_degree(s, r) > 0; }

  void add_sender(SenderId s);
  void begin_interaction() { ++interactions; }
  void add_receiver(SenderId s, ReceiverId r);

  bool operator==(const HistoryState&) const = default;
};

// A prefix position: `records` complete interactions plus the first `receivers`
// receivers of the next one. The partial interaction's senders count once it has
// started (receivers > 0).
struct Prefix {
  std::size_t records = 0;
  std::size_t receivers = 0;
};

// Replays the log up to `prefix`. Receivers of interaction n are attributed to
// attribution[n]; without an attribution every replayed interaction must have a
// single sender.
HistoryState replay_history(const InteractionLog& log, Prefix prefix,
                            std::span<const SenderId> attribution = {});

}  // namespace hvcm
