#include "hvcm/seating.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "hvcm/error.hpp"
#include "hvcm/special.hpp"
#include "hvcm/weights.hpp"

namespace hvcm {

using nlohmann::json;

double SeatWeights::total() const {
  double t = fresh;
  for (const auto& [slot, w] : existing) t += w;
  return t;
}

SeatingState::SeatingState(InteractionLog log, std::vector<SenderId> attribution)
    : log_(std::move(log)), attribution_(std::move(attribution)) {
  if (attribution_.size() != log_.size()) {
    throw Error("seating: attribution length differs from the number of interactions");
  }
  offsets_.reserve(log_.size() + 1);
  std::size_t o = 0;
  for (std::size_t n = 0; n < log_.size(); ++n) {
    if (!log_[n].lists_sender(attribution_[n])) {
      throw Error("seating: interaction " + std::to_string(n) +
                  " is attributed to a sender it does not list");
    }
    offsets_.push_back(o);
    o += log_[n].receivers.size();
    z_history_.add(attribution_[n]);
  }
  offsets_.push_back(o);
  seats_.assign(o, kUnseated);
  unseated_ = o;
  senders_.resize(log_.num_sender_ids());
  label_tables_.assign(log_.num_receiver_ids(), 0);
}

SeatingState SeatingState::sequential(InteractionLog log, std::vector<SenderId> attribution,
                                      const HvcmParams& params, Rng& rng) {
  SeatingState st(std::move(log), std::move(attribution));
  for (std::size_t n = 0; n < st.log_.size(); ++n) {
    for (std::size_t j = 0; j < st.log_[n].receivers.size(); ++j) st.seat(n, j, params, rng);
  }
  return st;
}

SeatingState SeatingState::from_assignments(InteractionLog log, std::vector<SenderId> attribution,
                                            const std::vector<std::vector<std::uint32_t>>& seats) {
  SeatingState st(std::move(log), std::move(attribution));
  if (seats.size() != st.log_.size()) throw Error("seating: one seat list per interaction needed");
  for (std::size_t n = 0; n < seats.size(); ++n) {
    if (seats[n].size() != st.log_[n].receivers.size()) {
      throw Error("seating: seat list length differs from the receiver count");
    }
    const SenderId s = st.attribution_[n];
    auto& sender = st.senders_[index(s)];
    for (std::size_t j = 0; j < seats[n].size(); ++j) {
      const std::uint32_t slot = seats[n][j];
      if (slot == kUnseated) throw Error("seating: invalid arena slot");
      if (slot >= sender.arena.size()) sender.arena.resize(slot + 1);
      if (sender.arena[slot].degree == 0) st.register_table(s, st.log_[n].receivers[j], slot);
      st.place(n, j, slot);
    }
  }
  for (auto& sender : st.senders_) {
    sender.free_slots.clear();
    for (std::uint32_t i = static_cast<std::uint32_t>(sender.arena.size()); i-- > 0;) {
      if (sender.arena[i].degree == 0) sender.free_slots.push_back(i);
    }
  }
  return st;
}

std::uint64_t SeatingState::label_tables(ReceiverId r) const {
  return index(r) < label_tables_.size() ? label_tables_[index(r)] : 0;
}

std::uint64_t SeatingState::sender_total(SenderId s) const {
  return index(s) < senders_.size() ? senders_[index(s)].total : 0;
}

std::uint64_t SeatingState::sender_tables(SenderId s) const {
  return index(s) < senders_.size() ? senders_[index(s)].tables : 0;
}

std::uint64_t SeatingState::latent(SenderId s, ReceiverId r) const {
  if (index(s) >= senders_.size()) return 0;
  const auto& map = senders_[index(s)].by_label;
  auto it = map.find(index(r));
  return it == map.end() ? 0 : it->second.size();
}

const std::vector<Table>& SeatingState::arena(SenderId s) const {
  return senders_.at(index(s)).arena;
}

std::size_t SeatingState::obs_index(std::size_t n, std::size_t j) const {
  if (n >= log_.size() || j >= log_[n].receivers.size()) {
    throw Error("seating: observation index out of range");
  }
  return offsets_[n] + j;
}

std::uint32_t SeatingState::seat_of(std::size_t n, std::size_t j) const {
  return seats_[obs_index(n, j)];
}

SeatingState::SenderTables& SeatingState::sender_state(SenderId s) {
  if (index(s) >= senders_.size()) throw Error("seating: unknown sender");
  return senders_[index(s)];
}

SeatWeights SeatingState::seat_weights(SenderId s, ReceiverId r, const HvcmParams& params) const {
  SeatWeights w;
  const auto& local = params.local_for(s);
  const auto& global = params.global;
  std::uint64_t tables = 0;
  if (index(s) < senders_.size()) {
    const auto& sender = senders_[index(s)];
    tables = sender.tables;
    auto it = sender.by_label.find(index(r));
    if (it != sender.by_label.end()) {
      w.existing.reserve(it->second.size());
      for (std::uint32_t slot : it->second) {
        w.existing.emplace_back(
            slot, weights::existing(static_cast<double>(sender.arena[slot].degree), local.discount));
      }
    }
  }
  double label = 1.0;
  if (grand_total_ > 0) {
    label = weights::label_probability(static_cast<double>(label_tables(r)),
                                       static_cast<double>(grand_total_),
                                       static_cast<double>(distinct_labels_), global.discount,
                                       global.concentration);
  }
  w.fresh = std::max(0.0, weights::fresh(static_cast<double>(tables), local.discount,
                                         local.concentration) *
                              label);
  return w;
}

std::uint32_t SeatingState::open_table(SenderId s, ReceiverId r) {
  auto& sender = sender_state(s);
  std::uint32_t slot = 0;
  if (!sender.free_slots.empty()) {
    slot = sender.free_slots.back();
    sender.free_slots.pop_back();
  } else {
    slot = static_cast<std::uint32_t>(sender.arena.size());
  }
  register_table(s, r, slot);
  return slot;
}

void SeatingState::register_table(SenderId s, ReceiverId r, std::uint32_t slot) {
  auto& sender = sender_state(s);
  if (slot >= sender.arena.size()) sender.arena.resize(slot + 1);
  sender.arena[slot] = Table{r, 0};
  sender.by_label[index(r)].push_back(slot);
  ++sender.tables;
  if (index(r) >= label_tables_.size()) label_tables_.resize(index(r) + 1, 0);
  if (label_tables_[index(r)]++ == 0) ++distinct_labels_;
  ++grand_total_;
}

void SeatingState::close_table(SenderId s, std::uint32_t slot) {
  auto& sender = sender_state(s);
  const ReceiverId r = sender.arena[slot].label;
  auto it = sender.by_label.find(index(r));
  auto& list = it->second;
  list.erase(std::find(list.begin(), list.end(), slot));
  if (list.empty()) sender.by_label.erase(it);
  sender.arena[slot] = Table{};
  sender.free_slots.push_back(slot);
  --sender.tables;
  if (--label_tables_[index(r)] == 0) --distinct_labels_;
  --grand_total_;
}

bool SeatingState::table_open(SenderId s, ReceiverId r, std::uint32_t slot) const {
  const auto& sender = senders_[index(s)];
  if (slot >= sender.arena.size() || sender.arena[slot].label != r) return false;
  auto it = sender.by_label.find(index(r));
  return it != sender.by_label.end() &&
         std::find(it->second.begin(), it->second.end(), slot) != it->second.end();
}

void SeatingState::place(std::size_t n, std::size_t j, std::uint32_t slot) {
  const std::size_t o = obs_index(n, j);
  if (seats_[o] != kUnseated) throw Error("seating: observation is already seated");
  const SenderId s = attribution_[n];
  const ReceiverId r = log_[n].receivers[j];
  auto& sender = sender_state(s);
  if (slot == kUnseated) {
    slot = open_table(s, r);
  } else if (!table_open(s, r, slot)) {
    throw Error("seating: slot is not an open table with the observation's label");
  }
  ++sender.arena[slot].degree;
  ++sender.total;
  seats_[o] = slot;
  --unseated_;
}

void SeatingState::remove(std::size_t n, std::size_t j) {
  const std::size_t o = obs_index(n, j);
  const std::uint32_t slot = seats_[o];
  if (slot == kUnseated) throw Error("seating: observation is not seated");
  const SenderId s = attribution_[n];
  auto& sender = sender_state(s);
  --sender.total;
  if (--sender.arena[slot].degree == 0) close_table(s, slot);
  seats_[o] = kUnseated;
  ++unseated_;
}

double SeatingState::seat(std::size_t n, std::size_t j, const HvcmParams& params, Rng& rng) {
  const SenderId s = attribution_[n];
  const ReceiverId r = log_[n].receivers[j];
  const auto w = seat_weights(s, r, params);
  std::vector<double> probs;
  probs.reserve(w.existing.size() + 1);
  for (const auto& [slot, weight] : w.existing) probs.push_back(weight);
  probs.push_back(w.fresh);
  const double total = w.total();
  if (!(total > 0.0)) throw Error("seating: observation has zero probability under the parameters");
  const double denom =
      static_cast<double>(sender_total(s)) + params.local_for(s).concentration;
  const std::size_t k = probs.size() == 1 ? 0 : rng.categorical(probs);
  place(n, j, k < w.existing.size() ? w.existing[k].first : kUnseated);
  return total / denom;
}

void SeatingState::reseat(std::size_t n, std::size_t j, const HvcmParams& params, Rng& rng) {
  remove(n, j);
  seat(n, j, params, rng);
}

void SeatingState::remove_interaction(std::size_t n) {
  for (std::size_t j = 0; j < log_[n].receivers.size(); ++j) {
    if (seats_[obs_index(n, j)] != kUnseated) remove(n, j);
  }
}

void SeatingState::set_attribution(std::size_t n, SenderId s) {
  if (n >= log_.size()) throw Error("seating: interaction index out of range");
  for (std::size_t j = 0; j < log_[n].receivers.size(); ++j) {
    if (seats_[obs_index(n, j)] != kUnseated) {
      throw Error("seating: cannot change the attribution of a seated interaction");
    }
  }
  if (!log_[n].lists_sender(s)) throw Error("seating: attribution must be a listed sender");
  z_history_.remove(attribution_[n]);
  z_history_.add(s);
  attribution_[n] = s;
}

void SeatingState::audit() const {
  auto fail = [](const std::string& what) { throw Error("seating audit: " + what); };
  std::vector<std::vector<std::uint64_t>> degree(senders_.size());
  std::vector<std::uint64_t> totals(senders_.size(), 0);
  std::size_t unseated = 0;
  ZHistory hz;
  for (std::size_t n = 0; n < log_.size(); ++n) {
    const SenderId s = attribution_[n];
    if (!log_[n].lists_sender(s)) fail("attribution outside the sender multiset");
    hz.add(s);
    const auto& sender = senders_[index(s)];
    auto& deg = degree[index(s)];
    deg.resize(sender.arena.size(), 0);
    for (std::size_t j = 0; j < log_[n].receivers.size(); ++j) {
      const std::uint32_t slot = seats_[offsets_[n] + j];
      if (slot == kUnseated) {
        ++unseated;
        continue;
      }
      if (slot >= sender.arena.size()) fail("seat outside the sender arena");
      if (sender.arena[slot].label != log_[n].receivers[j]) fail("seat label differs from receiver");
      ++deg[slot];
      ++totals[index(s)];
    }
  }
  if (unseated != unseated_) fail("unseated count mismatch");
  for (std::size_t i = 0; i < hz.count.size() || i < z_history_.count.size(); ++i) {
    if (hz.of(sender_id(static_cast<std::uint32_t>(i))) !=
        z_history_.of(sender_id(static_cast<std::uint32_t>(i)))) {
      fail("attribution history mismatch");
    }
  }
  std::vector<std::uint64_t> label_tables(label_tables_.size(), 0);
  std::uint64_t grand = 0;
  for (std::size_t s = 0; s < senders_.size(); ++s) {
    const auto& sender = senders_[s];
    auto& deg = degree[s];
    deg.resize(sender.arena.size(), 0);
    if (totals[s] != sender.total) fail("sender total mismatch");
    std::uint64_t live = 0;
    std::vector<std::uint8_t> listed(sender.arena.size(), 0);
    for (const auto& [label, slots] : sender.by_label) {
      if (slots.empty()) fail("empty label list");
      for (auto slot : slots) {
        if (slot >= sender.arena.size() || listed[slot]) fail("label list corrupt");
        if (index(sender.arena[slot].label) != label) fail("label list points at another label");
        listed[slot] = 1;
      }
    }
    std::vector<std::uint8_t> freed(sender.arena.size(), 0);
    for (auto slot : sender.free_slots) {
      if (slot >= sender.arena.size() || freed[slot]) fail("free list corrupt");
      freed[slot] = 1;
    }
    for (std::size_t v = 0; v < sender.arena.size(); ++v) {
      const auto& t = sender.arena[v];
      if (t.degree != deg[v]) fail("table degree mismatch");
      if (t.degree > 0) {
        ++live;
        if (!listed[v] || freed[v]) fail("live table not indexed");
        if (index(t.label) >= label_tables.size()) fail("label outside receiver vocabulary");
        ++label_tables[index(t.label)];
      } else if (listed[v] || !freed[v]) {
        fail("empty table still indexed");
      }
    }
    if (live != sender.tables) fail("sender table count mismatch");
    grand += live;
  }
  if (label_tables != label_tables_) fail("label table counts mismatch");
  if (grand != grand_total_) fail("grand total mismatch");
  const auto distinct = static_cast<std::size_t>(
      std::count_if(label_tables.begin(), label_tables.end(), [](auto v) { return v > 0; }));
  if (distinct != distinct_labels_) fail("distinct label count mismatch");
}

double SeatingState::receiver_log_likelihood(const HvcmParams& params) const {
  if (unseated_ != 0) throw Error("seating: likelihood needs every observation seated");
  double ll = 0.0;
  const auto& g = params.global;
  if (distinct_labels_ > 0) {
    ll += log_rising(g.concentration + g.discount, g.discount, distinct_labels_ - 1);
    ll -= log_rising(g.concentration + 1.0, 1.0, grand_total_ - 1);
    for (auto v : label_tables_) {
      if (v > 1) ll += log_rising(1.0 - g.discount, 1.0, v - 1);
    }
  }
  for (std::size_t s = 0; s < senders_.size(); ++s) {
    const auto& sender = senders_[s];
    if (sender.total == 0) continue;
    const auto& local = params.local_for(sender_id(static_cast<std::uint32_t>(s)));
    ll += log_rising(local.concentration + local.discount, local.discount, sender.tables - 1);
    ll -= log_rising(local.concentration + 1.0, 1.0, sender.total - 1);
    for (const auto& t : sender.arena) {
      if (t.degree > 1) ll += log_rising(1.0 - local.discount, 1.0, t.degree - 1);
    }
  }
  return ll;
}

LikelihoodParts SeatingState::log_likelihood_parts(const HvcmParams& params) const {
  LikelihoodParts p;
  p.receivers = receiver_log_likelihood(params);
  p.senders = sender_log_likelihood(log_, params.sender);
  p.attribution = attribution_log_likelihood(log_, attribution_, params.z);
  p.sizes = size_log_likelihood(log_, attribution_, params);
  return p;
}

namespace {

json log_to_json(const InteractionLog& log) {
  json records = json::array();
  for (const auto& rec : log.records()) {
    json s = json::array();
    json r = json::array();
    for (auto id : rec.senders) s.push_back(index(id));
    for (auto id : rec.receivers) r.push_back(index(id));
    records.push_back({{"s", s}, {"r", r}});
  }
  return {{"shared", log.shared_population()},
          {"senders", log.sender_vocab().names()},
          {"receivers", log.shared_population() ? json::array() : json(log.receiver_vocab().names())},
          {"records", records}};
}

InteractionLog log_from_json(const json& j) {
  InteractionLog log(j.at("shared").get<bool>());
  for (const auto& name : j.at("senders")) log.intern_sender(name.get<std::string>());
  if (!log.shared_population()) {
    for (const auto& name : j.at("receivers")) log.intern_receiver(name.get<std::string>());
  }
  for (const auto& rec : j.at("records")) {
    std::vector<SenderId> s;
    std::vector<ReceiverId> r;
    for (const auto& id : rec.at("s")) s.push_back(sender_id(id.get<std::uint32_t>()));
    for (const auto& id : rec.at("r")) r.push_back(receiver_id(id.get<std::uint32_t>()));
    log.append(std::move(s), std::move(r));
  }
  return log;
}

}  // namespace

json SeatingState::to_json() const {
  json attribution = json::array();
  for (auto s : attribution_) attribution.push_back(index(s));
  json seats = json::array();
  for (std::size_t n = 0; n < log_.size(); ++n) {
    json row = json::array();
    for (std::size_t j = 0; j < log_[n].receivers.size(); ++j) {
      const auto slot = seats_[offsets_[n] + j];
      row.push_back(slot == kUnseated ? json(nullptr) : json(slot));
    }
    seats.push_back(row);
  }
  json senders = json::array();
  for (const auto& sender : senders_) {
    json arena = json::array();
    for (const auto& t : sender.arena) arena.push_back({index(t.label), t.degree});
    std::map<std::uint32_t, const std::vector<std::uint32_t>*> ordered;
    for (const auto& [label, slots] : sender.by_label) ordered.emplace(label, &slots);
    json by_label = json::array();
    for (const auto& [label, slots] : ordered) by_label.push_back({label, *slots});
    senders.push_back({{"arena", arena}, {"free", sender.free_slots}, {"by_label", by_label}});
  }
  return {{"format", "hvcm-seating"},
          {"version", 1},
          {"log", log_to_json(log_)},
          {"attribution", attribution},
          {"seats", seats},
          {"senders", senders}};
}

SeatingState SeatingState::from_json(const json& j) {
  if (j.value("format", "") != "hvcm-seating" || j.value("version", 0) != 1) {
    throw Error("seating checkpoint: unknown format or version");
  }
  std::vector<SenderId> attribution;
  for (const auto& s : j.at("attribution")) attribution.push_back(sender_id(s.get<std::uint32_t>()));
  SeatingState st(log_from_json(j.at("log")), std::move(attribution));
  const auto& senders = j.at("senders");
  if (senders.size() != st.senders_.size()) throw Error("seating checkpoint: sender count mismatch");
  for (std::size_t s = 0; s < senders.size(); ++s) {
    auto& sender = st.senders_[s];
    for (const auto& t : senders[s].at("arena")) {
      sender.arena.push_back(Table{receiver_id(t.at(0).get<std::uint32_t>()),
                                   t.at(1).get<std::uint64_t>()});
    }
    sender.free_slots = senders[s].at("free").get<std::vector<std::uint32_t>>();
    for (const auto& entry : senders[s].at("by_label")) {
      sender.by_label[entry.at(0).get<std::uint32_t>()] =
          entry.at(1).get<std::vector<std::uint32_t>>();
    }
    for (const auto& t : sender.arena) {
      if (t.degree == 0) continue;
      sender.total += t.degree;
      ++sender.tables;
      if (index(t.label) >= st.label_tables_.size()) {
        throw Error("seating checkpoint: label outside the receiver vocabulary");
      }
      if (st.label_tables_[index(t.label)]++ == 0) ++st.distinct_labels_;
      ++st.grand_total_;
    }
  }
  const auto& seats = j.at("seats");
  if (seats.size() != st.log_.size()) throw Error("seating checkpoint: seat rows mismatch");
  for (std::size_t n = 0; n < seats.size(); ++n) {
    if (seats[n].size() != st.log_[n].receivers.size()) {
      throw Error("seating checkpoint: seat row length mismatch");
    }
    for (std::size_t jj = 0; jj < seats[n].size(); ++jj) {
      if (seats[n][jj].is_null()) continue;
      st.seats_[st.offsets_[n] + jj] = seats[n][jj].get<std::uint32_t>();
      --st.unseated_;
    }
  }
  st.audit();
  return st;
}

bool SeatingState::operator==(const SeatingState& other) const {
  if (!(log_ == other.log_) || attribution_ != other.attribution_ || seats_ != other.seats_ ||
      senders_.size() != other.senders_.size() || label_tables_ != other.label_tables_ ||
      grand_total_ != other.grand_total_ || distinct_labels_ != other.distinct_labels_) {
    return false;
  }
  for (std::size_t s = 0; s < senders_.size(); ++s) {
    const auto& a = senders_[s];
    const auto& b = other.senders_[s];
    if (a.arena != b.arena || a.free_slots != b.free_slots || a.by_label != b.by_label ||
        a.total != b.total || a.tables != b.tables) {
      return false;
    }
  }
  return true;
}

std::vector<SenderId> sample_attribution(const InteractionLog& log, const PitmanYor& z, Rng& rng) {
  ZHistory hz;
  std::vector<SenderId> out;
  out.reserve(log.size());
  for (const auto& rec : log.records()) out.push_back(sample_z(hz, rec.senders, z, rng));
  return out;
}

double sender_log_likelihood(const InteractionLog& log, const PitmanYor& sender) {
  if (log.empty()) return 0.0;
  std::vector<std::uint64_t> out(log.num_sender_ids(), 0);
  double ll = 0.0;
  std::uint64_t slots = 0;
  for (const auto& rec : log.records()) {
    ll += std::lgamma(static_cast<double>(rec.senders.size()) + 1.0);
    for (std::size_t i = 0; i < rec.senders.size();) {
      std::size_t k = i;
      while (k < rec.senders.size() && rec.senders[k] == rec.senders[i]) ++k;
      ll -= std::lgamma(static_cast<double>(k - i) + 1.0);
      i = k;
    }
    for (auto s : rec.senders) ++out[index(s)];
    slots += rec.senders.size();
  }
  std::size_t distinct = 0;
  for (auto d : out) {
    if (d == 0) continue;
    ++distinct;
    ll += log_rising(1.0 - sender.discount, 1.0, d - 1);
  }
  ll += log_rising(sender.concentration + sender.discount, sender.discount, distinct - 1);
  ll -= log_rising(sender.concentration + 1.0, 1.0, slots - 1);
  return ll;
}

double attribution_log_likelihood(const InteractionLog& log, std::span<const SenderId> attribution,
                                  const PitmanYor& z) {
  if (attribution.size() != log.size()) throw Error("attribution length mismatch");
  ZHistory hz;
  double ll = 0.0;
  for (std::size_t n = 0; n < log.size(); ++n) {
    const auto distinct = log[n].distinct_senders();
    if (distinct.size() > 1) {
      const auto w = z_weights(hz, distinct, z);
      double total = 0.0;
      double chosen = 0.0;
      for (std::size_t i = 0; i < distinct.size(); ++i) {
        total += w[i];
        if (distinct[i] == attribution[n]) chosen = w[i];
      }
      ll += std::log(chosen) - std::log(total);
    }
    hz.add(attribution[n]);
  }
  return ll;
}

double size_log_likelihood(const InteractionLog& log, std::span<const SenderId> attribution,
                           const HvcmParams& params) {
  if (attribution.size() != log.size()) throw Error("attribution length mismatch");
  double ll = 0.0;
  for (std::size_t n = 0; n < log.size(); ++n) {
    ll += std::log(params.sender_size.prob(log[n].senders.size()));
    ll += std::log(params.receiver_size_for(attribution[n]).prob(log[n].receivers.size()));
  }
  return ll;
}

namespace {

// Weight of every way to split a group of `size` same-label observations of one
// sender into k tables: entry k - 1 sums prod_blocks [1 - alpha_s]_1^{|b| - 1}
// over set partitions with k blocks, enumerated as restricted growth strings.
std::vector<double> table_split_weights(std::size_t size, double alpha_s) {
  std::vector<double> out(size, 0.0);
  std::vector<std::size_t> rgs(size, 0);
  std::vector<std::size_t> block_size(size, 0);
  while (true) {
    std::fill(block_size.begin(), block_size.end(), 0);
    std::size_t blocks = 0;
    for (auto b : rgs) {
      ++block_size[b];
      blocks = std::max(blocks, b + 1);
    }
    double w = 1.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      w *= std::exp(log_rising(1.0 - alpha_s, 1.0, block_size[b] - 1));
    }
    out[blocks - 1] += w;
    // Next restricted growth string: rgs[i] <= 1 + max(rgs[0..i-1]).
    std::size_t i = size;
    bool advanced = false;
    while (i-- > 1) {
      std::size_t prefix_max = 0;
      for (std::size_t k = 0; k < i; ++k) prefix_max = std::max(prefix_max, rgs[k]);
      if (rgs[i] <= prefix_max) {
        ++rgs[i];
        std::fill(rgs.begin() + static_cast<std::ptrdiff_t>(i) + 1, rgs.end(), 0);
        advanced = true;
        break;
      }
    }
    if (!advanced) break;
  }
  return out;
}

double receiver_marginal(const InteractionLog& log, std::span<const SenderId> attribution,
                         const HvcmParams& params) {
  struct Group {
    SenderId s;
    ReceiverId r;
    std::vector<double> split;
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> counts;
  for (std::size_t n = 0; n < log.size(); ++n) {
    for (auto r : log[n].receivers) ++counts[{index(attribution[n]), index(r)}];
  }
  std::vector<Group> groups;
  for (const auto& [key, d] : counts) {
    const SenderId s = sender_id(key.first);
    groups.push_back({s, receiver_id(key.second),
                      table_split_weights(d, params.local_for(s).discount)});
  }
  std::map<std::uint32_t, std::uint64_t> sender_total;
  for (const auto& [key, d] : counts) sender_total[key.first] += d;

  const auto& g = params.global;
  double total = 0.0;
  std::vector<std::size_t> k(groups.size(), 1);
  while (true) {
    double w = 1.0;
    std::map<std::uint32_t, std::uint64_t> label_tables;
    std::map<std::uint32_t, std::uint64_t> sender_tables;
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      w *= groups[i].split[k[i] - 1];
      label_tables[index(groups[i].r)] += k[i];
      sender_tables[index(groups[i].s)] += k[i];
      m += k[i];
    }
    double ll = 0.0;
    if (m > 0) {
      ll += log_rising(g.concentration + g.discount, g.discount, label_tables.size() - 1);
      ll -= log_rising(g.concentration + 1.0, 1.0, m - 1);
      for (const auto& [r, v] : label_tables) ll += log_rising(1.0 - g.discount, 1.0, v - 1);
    }
    for (const auto& [s, t] : sender_tables) {
      const auto& local = params.local_for(sender_id(s));
      ll += log_rising(local.concentration + local.discount, local.discount, t - 1);
      ll -= log_rising(local.concentration + 1.0, 1.0, sender_total[s] - 1);
    }
    total += w * std::exp(ll);
    std::size_t i = 0;
    while (i < groups.size() && ++k[i] > groups[i].split.size()) k[i++] = 1;
    if (i == groups.size()) break;
  }
  return total;
}

}  // namespace

double marginal_likelihood_bruteforce(const InteractionLog& log, const HvcmParams& params,
                                      std::size_t max_slots) {
  if (log.total_receiver_slots() > max_slots) {
    throw Error("brute-force marginal: instance has more than " + std::to_string(max_slots) +
                " receiver slots");
  }
  if (log.empty()) return 1.0;
  std::vector<std::vector<SenderId>> choices;
  choices.reserve(log.size());
  for (const auto& rec : log.records()) choices.push_back(rec.distinct_senders());
  std::vector<std::size_t> pick(log.size(), 0);
  std::vector<SenderId> attribution(log.size());
  double total = 0.0;
  while (true) {
    for (std::size_t n = 0; n < log.size(); ++n) attribution[n] = choices[n][pick[n]];
    const double prior = attribution_log_likelihood(log, attribution, params.z) +
                         size_log_likelihood(log, attribution, params);
    total += std::exp(prior) * receiver_marginal(log, attribution, params);
    std::size_t n = 0;
    while (n < log.size() && ++pick[n] == choices[n].size()) pick[n++] = 0;
    if (n == log.size()) break;
  }
  return total * std::exp(sender_log_likelihood(log, params.sender));
}

}  // namespace hvcm
