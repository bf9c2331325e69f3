#include "hvcm/interaction.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "hvcm/error.hpp"

namespace hvcm {

std::uint32_t Vocabulary::intern(std::string_view name) {
  std::string key(name);
  auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<SenderId> Interaction::distinct_senders() const {
  std::vector<SenderId> out = senders;
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Interaction::lists_sender(SenderId s) const {
  return std::binary_search(senders.begin(), senders.end(), s);
}

bool Interaction::canonically_equal(const Interaction& other) const {
  if (senders != other.senders || receivers.size() != other.receivers.size()) return false;
  auto a = receivers;
  auto b = other.receivers;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

SenderId InteractionLog::intern_sender(std::string_view name) {
  return sender_id(senders_.intern(name));
}

ReceiverId InteractionLog::intern_receiver(std::string_view name) {
  return receiver_id(shared_ ? senders_.intern(name) : receivers_.intern(name));
}

void InteractionLog::append(std::vector<SenderId> senders, std::vector<ReceiverId> receivers) {
  if (senders.empty()) throw Error("interaction has an empty sender multiset");
  if (receivers.empty()) throw Error("interaction has an empty receiver multiset");
  for (SenderId s : senders) {
    if (index(s) >= senders_.size()) throw Error("sender id not registered in vocabulary");
  }
  for (ReceiverId r : receivers) {
    if (index(r) >= num_receiver_ids()) throw Error("receiver id not registered in vocabulary");
  }
  std::sort(senders.begin(), senders.end());
  records_.push_back(Interaction{std::move(senders), std::move(receivers)});
}

void InteractionLog::append_named(std::span<const std::string> senders,
                                  std::span<const std::string> receivers) {
  std::vector<SenderId> s;
  std::vector<ReceiverId> r;
  s.reserve(senders.size());
  r.reserve(receivers.size());
  for (const auto& name : senders) s.push_back(intern_sender(name));
  for (const auto& name : receivers) r.push_back(intern_receiver(name));
  append(std::move(s), std::move(r));
}

std::size_t InteractionLog::total_receiver_slots() const {
  std::size_t total = 0;
  for (const auto& rec : records_) total += rec.receivers.size();
  return total;
}

std::size_t InteractionLog::total_sender_slots() const {
  std::size_t total = 0;
  for (const auto& rec : records_) total += rec.senders.size();
  return total;
}

bool InteractionLog::has_multi_sender() const {
  return std::any_of(records_.begin(), records_.end(),
                     [](const Interaction& rec) { return rec.senders.size() > 1; });
}

bool InteractionLog::operator==(const InteractionLog& other) const {
  return shared_ == other.shared_ && records_ == other.records_ && senders_ == other.senders_ &&
         receiver_vocab() == other.receiver_vocab();
}

namespace {

// Label-free description of where a sender-population element occurs:
// (record, role, position or multiplicity).
using Occurrence = std::tuple<std::size_t, int, std::size_t>;

std::vector<std::vector<Occurrence>> sender_signatures(const InteractionLog& log) {
  std::vector<std::vector<Occurrence>> sig(log.num_sender_ids());
  for (std::size_t n = 0; n < log.size(); ++n) {
    const auto& rec = log[n];
    for (std::size_t i = 0; i < rec.senders.size();) {
      std::size_t j = i;
      while (j < rec.senders.size() && rec.senders[j] == rec.senders[i]) ++j;
      sig[index(rec.senders[i])].emplace_back(n, 0, j - i);
      i = j;
    }
    if (log.shared_population()) {
      for (std::size_t j = 0; j < rec.receivers.size(); ++j) {
        sig[index(rec.receivers[j])].emplace_back(n, 1, j);
      }
    }
  }
  return sig;
}

constexpr std::uint32_t kUnmapped = UINT32_MAX;

}  // namespace

InteractionLog canonicalize(const InteractionLog& log) {
  const bool shared = log.shared_population();
  const auto signatures = sender_signatures(log);
  std::vector<std::uint32_t> sender_map(log.num_sender_ids(), kUnmapped);
  std::vector<std::uint32_t> receiver_map(shared ? 0 : log.num_receiver_ids(), kUnmapped);
  std::uint32_t next_sender = 0;
  std::uint32_t next_receiver = 0;
  auto& population_map_r = shared ? sender_map : receiver_map;
  auto& next_r = shared ? next_sender : next_receiver;

  for (const auto& rec : log.records()) {
    std::vector<std::uint32_t> fresh;
    for (SenderId s : rec.distinct_senders()) {
      if (sender_map[index(s)] == kUnmapped) fresh.push_back(index(s));
    }
    // Ties between simultaneously new senders are broken by their occurrence
    // pattern; equal patterns are interchangeable, so the result is label-free.
    std::stable_sort(fresh.begin(), fresh.end(), [&](std::uint32_t a, std::uint32_t b) {
      return signatures[a] < signatures[b];
    });
    for (std::uint32_t s : fresh) sender_map[s] = next_sender++;
    for (ReceiverId r : rec.receivers) {
      if (population_map_r[index(r)] == kUnmapped) population_map_r[index(r)] = next_r++;
    }
  }

  InteractionLog out(shared);
  for (std::uint32_t i = 0; i < next_sender; ++i) out.intern_sender(std::to_string(i + 1));
  if (!shared) {
    for (std::uint32_t i = 0; i < next_receiver; ++i) out.intern_receiver(std::to_string(i + 1));
  }
  for (const auto& rec : log.records()) {
    std::vector<SenderId> s;
    std::vector<ReceiverId> r;
    for (SenderId x : rec.senders) s.push_back(sender_id(sender_map[index(x)]));
    for (ReceiverId x : rec.receivers) r.push_back(receiver_id(population_map_r[index(x)]));
    out.append(std::move(s), std::move(r));
  }
  return out;
}

InteractionLog restrict_log(const InteractionLog& log, std::span<const std::size_t> indices) {
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= log.size()) throw Error("restrict: interaction index out of range");
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw Error("restrict: indices must be strictly increasing");
    }
  }
  const bool shared = log.shared_population();
  std::vector<std::uint8_t> used_s(log.num_sender_ids(), 0);
  std::vector<std::uint8_t> used_r(log.num_receiver_ids(), 0);
  for (std::size_t n : indices) {
    for (SenderId s : log[n].senders) used_s[index(s)] = 1;
    for (ReceiverId r : log[n].receivers) (shared ? used_s : used_r)[index(r)] = 1;
  }
  InteractionLog out(shared);
  std::vector<std::uint32_t> sender_map(used_s.size(), kUnmapped);
  std::vector<std::uint32_t> receiver_map(used_r.size(), kUnmapped);
  for (std::uint32_t i = 0; i < used_s.size(); ++i) {
    if (used_s[i]) sender_map[i] = index(out.intern_sender(log.sender_vocab().name(i)));
  }
  if (!shared) {
    for (std::uint32_t i = 0; i < used_r.size(); ++i) {
      if (used_r[i]) receiver_map[i] = index(out.intern_receiver(log.receiver_vocab().name(i)));
    }
  }
  const auto& rmap = shared ? sender_map : receiver_map;
  for (std::size_t n : indices) {
    std::vector<SenderId> s;
    std::vector<ReceiverId> r;
    for (SenderId x : log[n].senders) s.push_back(sender_id(sender_map[index(x)]));
    for (ReceiverId x : log[n].receivers) r.push_back(receiver_id(rmap[index(x)]));
    out.append(std::move(s), std::move(r));
  }
  return out;
}

std::uint64_t HistoryState::out(SenderId s) const {
  return index(s) < out_degree.size() ? out_degree[index(s)] : 0;
}

std::uint64_t HistoryState::in_degree(SenderId s, ReceiverId r) const {
  auto it = local_in_degree.find(pair_key(s, r));
  return it == local_in_degree.end() ? 0 : it->second;
}

std::uint64_t HistoryState::total(SenderId s) const {
  return index(s) < local_total.size() ? local_total[index(s)] : 0;
}

bool HistoryState::seen(ReceiverId r) const {
  return index(r) < receiver_seen.size() && receiver_seen[index(r)] != 0;
}

void HistoryState::add_sender(SenderId s) {
  if (index(s) >= out_degree.size()) out_degree.resize(index(s) + 1, 0);
  if (out_degree[index(s)]++ == 0) ++num_senders_seen;
  ++sender_slots;
}

void HistoryState::add_receiver(SenderId s, ReceiverId r) {
  ++local_in_degree[pair_key(s, r)];
  if (index(s) >= local_total.size()) local_total.resize(index(s) + 1, 0);
  ++local_total[index(s)];
  if (index(r) >= receiver_seen.size()) receiver_seen.resize(index(r) + 1, 0);
  if (!receiver_seen[index(r)]) {
    receiver_seen[index(r)] = 1;
    ++num_receivers_seen;
  }
  ++receiver_slots;
}

HistoryState replay_history(const InteractionLog& log, Prefix prefix,
                            std::span<const SenderId> attribution) {
  if (prefix.records > log.size()) throw Error("replay_history: prefix beyond end of log");
  if (prefix.receivers > 0 &&
      (prefix.records == log.size() || prefix.receivers > log[prefix.records].receivers.size())) {
    throw Error("replay_history: receiver position beyond interaction");
  }
  if (!attribution.empty() && attribution.size() != log.size()) {
    throw Error("replay_history: attribution length differs from log length");
  }
  HistoryState h;
  auto replay = [&](std::size_t n, std::size_t receivers) {
    const auto& rec = log[n];
    for (SenderId s : rec.senders) h.add_sender(s);
    h.begin_interaction();
    SenderId z{};
    if (!attribution.empty()) {
      z = attribution[n];
      if (!rec.lists_sender(z)) throw Error("replay_history: attribution not among senders");
    } else {
      if (rec.senders.size() != 1) {
        throw Error("replay_history: multi-sender interaction requires an attribution");
      }
      z = rec.senders.front();
    }
    for (std::size_t j = 0; j < receivers; ++j) h.add_receiver(z, rec.receivers[j]);
  };
  for (std::size_t n = 0; n < prefix.records; ++n) replay(n, log[n].receivers.size());
  if (prefix.receivers > 0) replay(prefix.records, prefix.receivers);
  return h;
}

}  // namespace hvcm
