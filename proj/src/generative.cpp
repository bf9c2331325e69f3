#include "hvcm/generative.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "hvcm/error.hpp"
#include "hvcm/weights.hpp"

namespace hvcm {

namespace {

template <class Vec>
void grow(Vec& v, std::size_t i) {
  if (i >= v.size()) v.resize(i + 1);
}

// O(1) draw from a Pitman-Yor urn whose per-item weight is count - discount:
// count - discount = (count - 1) + (1 - discount), so pick a uniform repeat entry
// or a uniform distinct item. Returns nullopt when the fresh-item mass wins.
template <class Id>
std::optional<Id> draw_from_urn(const std::vector<Id>& distinct, const std::vector<Id>& repeats,
                                double discount, double concentration, Rng& rng) {
  const double total = static_cast<double>(distinct.size() + repeats.size());
  if (total == 0.0) return std::nullopt;
  const double repeat_mass = static_cast<double>(repeats.size());
  const double distinct_mass = static_cast<double>(distinct.size()) * (1.0 - discount);
  const double fresh_mass =
      std::max(0.0, weights::fresh(static_cast<double>(distinct.size()), discount, concentration));
  const double u = rng.uniform() * (repeat_mass + distinct_mass + fresh_mass);
  if (u < repeat_mass) return repeats[rng.uniform_index(repeats.size())];
  if (u < repeat_mass + distinct_mass) return distinct[rng.uniform_index(distinct.size())];
  return std::nullopt;
}

ReceiverId fresh_receiver(const HistoryState& hist, const LatentDegreeState& lat) {
  return receiver_id(
      static_cast<std::uint32_t>(std::max(hist.receiver_seen.size(), lat.receiver_total.size())));
}

std::string sender_label(std::uint32_t id) { return "s" + std::to_string(id + 1); }
std::string receiver_label(std::uint32_t id) { return "r" + std::to_string(id + 1); }

}  // namespace

void ZHistory::add(SenderId s) {
  grow(count, index(s));
  if (count[index(s)]++ == 0) ++distinct;
  ++total;
}

void ZHistory::remove(SenderId s) {
  if (of(s) == 0) throw Error("ZHistory: removing an attribution that was never recorded");
  if (--count[index(s)] == 0) --distinct;
  --total;
}

std::uint64_t LatentDegreeState::latent_of(SenderId s, ReceiverId r) const {
  auto it = latent.find(pair_key(s, r));
  return it == latent.end() ? 0 : it->second;
}

std::uint64_t LatentDegreeState::label_total(ReceiverId r) const {
  return index(r) < receiver_total.size() ? receiver_total[index(r)] : 0;
}

std::uint64_t LatentDegreeState::tables_of(SenderId s) const {
  return index(s) < sender_tables.size() ? sender_tables[index(s)] : 0;
}

void LatentDegreeState::record(SenderId s, ReceiverId r, bool escaped) {
  grow(escaped_draws, index(s));
  grow(joined_draws, index(s));
  if (!escaped) {
    joined_draws[index(s)].push_back(r);
    return;
  }
  ++latent[pair_key(s, r)];
  grow(sender_tables, index(s));
  ++sender_tables[index(s)];
  escaped_draws[index(s)].push_back(r);
  grow(receiver_total, index(r));
  if (receiver_total[index(r)]++ == 0) {
    ++distinct_labels;
    labels.push_back(r);
  } else {
    repeat_labels.push_back(r);
  }
  ++grand_total;
}

SenderDraw sample_sender(const HistoryState& hist, const HvcmParams& params, Rng& rng) {
  const auto& py = params.sender;
  const double seen = static_cast<double>(hist.num_senders_seen);
  if (auto k = finite_population(py)) {
    if (hist.num_senders_seen > *k) throw Error("sample_sender: more senders than population size");
  }
  const double fresh = std::max(0.0, weights::fresh(seen, py.discount, py.concentration));
  double total = fresh;
  for (auto d : hist.out_degree) {
    if (d > 0) total += weights::existing(static_cast<double>(d), py.discount);
  }
  double u = rng.uniform() * total;
  std::optional<std::uint32_t> last;
  for (std::uint32_t i = 0; i < hist.out_degree.size(); ++i) {
    const auto d = hist.out_degree[i];
    if (d == 0) continue;
    const double w = weights::existing(static_cast<double>(d), py.discount);
    last = i;
    if (u < w) return {sender_id(i), false};
    u -= w;
  }
  if (fresh > 0.0 || !last) {
    assert(fresh > 0.0);
    return {sender_id(static_cast<std::uint32_t>(hist.out_degree.size())), true};
  }
  return {sender_id(*last), false};
}

double sender_probability(const HistoryState& hist, const HvcmParams& params,
                          std::optional<SenderId> s) {
  const auto& py = params.sender;
  const double denom = static_cast<double>(hist.sender_slots) + py.concentration;
  if (hist.sender_slots == 0) return s ? 0.0 : 1.0;
  if (!s || hist.out(*s) == 0) {
    return std::max(0.0, weights::fresh(static_cast<double>(hist.num_senders_seen), py.discount,
                                        py.concentration)) /
           denom;
  }
  return weights::existing(static_cast<double>(hist.out(*s)), py.discount) / denom;
}

ReceiverDraw sample_receiver(const HistoryState& hist, const LatentDegreeState& lat, SenderId s,
                             const HvcmParams& params, Rng& rng) {
  const auto& local = params.local_for(s);
  const double m_s = static_cast<double>(hist.total(s));
  const double t_s = static_cast<double>(lat.tables_of(s));
  const double joined = m_s - t_s;
  const double kept = (1.0 - local.discount) * t_s;
  const double u = rng.uniform() * (m_s + local.concentration);
  if (u < joined + kept) {
    const auto& list = u < joined ? lat.joined_draws[index(s)] : lat.escaped_draws[index(s)];
    return {list[rng.uniform_index(list.size())], false, false};
  }
  const auto& global = params.global;
  if (lat.grand_total == 0) return {fresh_receiver(hist, lat), true, true};
  if (auto r = draw_from_urn(lat.labels, lat.repeat_labels, global.discount, global.concentration,
                             rng)) {
    return {*r, true, false};
  }
  return {fresh_receiver(hist, lat), true, true};
}

double receiver_probability(const HistoryState& hist, const LatentDegreeState& lat, SenderId s,
                            std::optional<ReceiverId> r, const HvcmParams& params) {
  const auto& local = params.local_for(s);
  const auto& global = params.global;
  const double v_r = r ? static_cast<double>(lat.label_total(*r)) : 0.0;
  const double label =
      lat.grand_total == 0
          ? (v_r > 0.0 ? 0.0 : 1.0)
          : weights::label_probability(v_r, static_cast<double>(lat.grand_total),
                                       static_cast<double>(lat.distinct_labels), global.discount,
                                       global.concentration);
  const double degree = r ? static_cast<double>(hist.in_degree(s, *r)) : 0.0;
  const double latent = r ? static_cast<double>(lat.latent_of(s, *r)) : 0.0;
  return weights::receiver_probability(degree, latent, static_cast<double>(lat.tables_of(s)),
                                       static_cast<double>(hist.total(s)), label, local.discount,
                                       local.concentration);
}

double escape_probability(const HistoryState& hist, const LatentDegreeState& lat, SenderId s,
                          const HvcmParams& params) {
  const auto& local = params.local_for(s);
  return weights::escape_probability(static_cast<double>(lat.tables_of(s)),
                                     static_cast<double>(hist.total(s)), local.discount,
                                     local.concentration);
}

void update_latent(LatentDegreeState& lat, const HistoryState& hist, SenderId s, ReceiverId r,
                   const HvcmParams& params, std::optional<bool> escaped, Rng& rng) {
  if (!hist.seen_locally(s, r)) {
    if (escaped && !*escaped) throw Error("update_latent: a first local occurrence must escape");
    lat.record(s, r, true);
    return;
  }
  const bool esc = escaped ? *escaped : rng.bernoulli(escape_probability(hist, lat, s, params));
  lat.record(s, r, esc);
}

std::vector<double> z_weights(const ZHistory& hz, std::span<const SenderId> distinct_senders,
                              const PitmanYor& z) {
  std::vector<double> w;
  w.reserve(distinct_senders.size());
  const double fresh =
      std::max(0.0, weights::fresh(static_cast<double>(hz.distinct), z.discount, z.concentration));
  for (SenderId s : distinct_senders) {
    const auto c = hz.of(s);
    w.push_back(c > 0 ? weights::existing(static_cast<double>(c), z.discount) : fresh);
  }
  return w;
}

SenderId sample_z(ZHistory& hz, std::span<const SenderId> senders, const PitmanYor& z, Rng& rng) {
  if (senders.empty()) throw Error("sample_z: empty sender multiset");
  std::vector<SenderId> distinct(senders.begin(), senders.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  SenderId chosen = distinct.front();
  if (distinct.size() > 1) {
    const auto w = z_weights(hz, distinct, z);
    chosen = distinct[rng.categorical(w)];
  }
  hz.add(chosen);
  return chosen;
}

namespace {

// Draws the receivers of one interaction attributed to z, updating all state.
void draw_receivers(SenderId z, std::size_t k2, const HvcmParams& params, HistoryState& hist,
                    LatentDegreeState& lat, InteractionLog& log, std::vector<ReceiverId>& out,
                    Rng& rng) {
  for (std::size_t j = 0; j < k2; ++j) {
    const auto draw = sample_receiver(hist, lat, z, params, rng);
    if (draw.is_new) {
      const auto id = log.intern_receiver(receiver_label(index(draw.id)));
      if (id != draw.id) throw Error("simulate: receiver ids out of sync with vocabulary");
    }
    update_latent(lat, hist, z, draw.id, params, draw.escaped, rng);
    hist.add_receiver(z, draw.id);
    out.push_back(draw.id);
  }
}

}  // namespace

SimulatedLog simulate(std::size_t n, const HvcmParams& params, Rng& rng) {
  params.validate();
  SimulatedLog out;
  HistoryState hist;
  auto& lat = out.latent;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k1 = params.sender_size.sample(rng);
    std::vector<SenderId> senders;
    for (std::size_t j = 0; j < k1; ++j) {
      const auto draw = sample_sender(hist, params, rng);
      if (draw.is_new) {
        const auto id = out.log.intern_sender(sender_label(index(draw.id)));
        if (id != draw.id) throw Error("simulate: sender ids out of sync with vocabulary");
      }
      hist.add_sender(draw.id);
      senders.push_back(draw.id);
    }
    hist.begin_interaction();
    const SenderId z = sample_z(lat.z_history, senders, params.z, rng);
    const std::size_t k2 = params.receiver_size_for(z).sample(rng);
    std::vector<ReceiverId> receivers;
    draw_receivers(z, k2, params, hist, lat, out.log, receivers, rng);
    out.log.append(std::move(senders), std::move(receivers));
    out.attribution.push_back(z);
  }
  return out;
}

namespace {

SimulatedLog simulate_conditional_into(InteractionLog log,
                                       std::span<const std::vector<SenderId>> senders,
                                       std::span<const std::size_t> sizes,
                                       const HvcmParams& params, Rng& rng,
                                       std::span<const SenderId> attribution) {
  if (senders.size() != sizes.size()) {
    throw Error("simulate_conditional: sender and size sequences differ in length");
  }
  if (!attribution.empty() && attribution.size() != senders.size()) {
    throw Error("simulate_conditional: attribution length differs from sender sequence");
  }
  params.validate();
  SimulatedLog out;
  out.log = std::move(log);
  HistoryState hist;
  auto& lat = out.latent;
  for (std::size_t i = 0; i < senders.size(); ++i) {
    if (senders[i].empty()) throw Error("simulate_conditional: empty sender multiset");
    if (sizes[i] == 0) throw Error("simulate_conditional: every interaction needs k2 >= 1");
    for (SenderId s : senders[i]) {
      if (index(s) >= out.log.num_sender_ids()) {
        throw Error("simulate_conditional: sender id outside vocabulary");
      }
      hist.add_sender(s);
    }
    hist.begin_interaction();
    SenderId z{};
    if (!attribution.empty()) {
      z = attribution[i];
      if (std::find(senders[i].begin(), senders[i].end(), z) == senders[i].end()) {
        throw Error("simulate_conditional: attribution not among the interaction's senders");
      }
      lat.z_history.add(z);
    } else {
      z = sample_z(lat.z_history, senders[i], params.z, rng);
    }
    std::vector<ReceiverId> receivers;
    draw_receivers(z, sizes[i], params, hist, lat, out.log, receivers, rng);
    out.log.append(senders[i], std::move(receivers));
    out.attribution.push_back(z);
  }
  return out;
}

}  // namespace

SimulatedLog simulate_conditional(std::span<const std::vector<SenderId>> senders,
                                  std::span<const std::size_t> sizes, const HvcmParams& params,
                                  Rng& rng, std::span<const SenderId> attribution) {
  std::uint32_t max_id = 0;
  bool any = false;
  for (const auto& rec : senders) {
    for (SenderId s : rec) {
      max_id = std::max(max_id, index(s));
      any = true;
    }
  }
  InteractionLog log;
  if (any) {
    for (std::uint32_t i = 0; i <= max_id; ++i) log.intern_sender(sender_label(i));
  }
  return simulate_conditional_into(std::move(log), senders, sizes, params, rng, attribution);
}

SimulatedLog simulate_conditional(const InteractionLog& observed, const HvcmParams& params,
                                  Rng& rng, std::span<const SenderId> attribution) {
  std::vector<std::vector<SenderId>> senders;
  std::vector<std::size_t> sizes;
  senders.reserve(observed.size());
  sizes.reserve(observed.size());
  for (const auto& rec : observed.records()) {
    senders.push_back(rec.senders);
    sizes.push_back(rec.receivers.size());
  }
  InteractionLog log;
  for (const auto& name : observed.sender_vocab().names()) log.intern_sender(name);
  return simulate_conditional_into(std::move(log), senders, sizes, params, rng, attribution);
}

namespace {

// Breaks sticks Beta(1 - discount, concentration + i discount), i = 1, 2, ...
// until the remaining length drops below the tolerance.
std::vector<double> break_sticks(const PitmanYor& py, const StickTruncation& trunc, Rng& rng,
                                 double& tail) {
  std::vector<double> w;
  double remaining = 1.0;
  for (std::size_t i = 1;; ++i) {
    const double b = py.concentration + static_cast<double>(i) * py.discount;
    const double beta = b > 0.0 ? rng.beta(1.0 - py.discount, b) : 1.0;
    w.push_back(remaining * beta);
    remaining *= 1.0 - beta;
    if (i >= trunc.sticks) {
      if (!trunc.tail_tolerance || remaining < *trunc.tail_tolerance) break;
    }
    if (i >= trunc.max_sticks) throw Error("stick breaking: tail did not fall below tolerance");
  }
  tail = remaining;
  return w;
}

}  // namespace

std::vector<double> local_frequencies(std::span<const double> global, double global_tail,
                                      double theta_s, Rng& rng, double& tail) {
  if (global.empty()) throw Error("stick breaking: empty global sticks");
  // Remaining global stick after r sticks, computed as a running product.
  std::vector<double> remaining(global.size());
  double rem = 1.0;
  for (std::size_t r = 0; r < global.size(); ++r) {
    rem -= global[r];
    remaining[r] = std::max(0.0, rem);
  }
  remaining.back() = global_tail;

  std::vector<double> f;
  f.reserve(global.size());
  double left = 1.0;
  for (std::size_t r = 0; r < global.size(); ++r) {
    const double a = theta_s * global[r];
    const double b = theta_s * remaining[r];
    double beta = 0.0;
    if (a <= 0.0) {
      beta = 0.0;
    } else if (b <= 0.0) {
      beta = 1.0;
    } else {
      beta = rng.beta(a, b);
    }
    f.push_back(left * beta);
    left *= 1.0 - beta;
  }
  tail = left;
  return f;
}

PaintboxWeights stick_breaking_frequencies(const HvcmParams& params, StickTruncation truncation,
                                           Rng& rng) {
  if (truncation.sticks == 0) throw Error("stick breaking: truncation must be at least 1");
  if (params.default_local.discount != 0.0) {
    throw Error("stick breaking: requires alpha_s = 0 for every sender");
  }
  for (const auto& [s, py] : params.local) {
    if (py.discount != 0.0) throw Error("stick breaking: requires alpha_s = 0 for every sender");
  }
  validate_population_urn(params.sender, "sender urn");
  validate_global_urn(params.global);

  PaintboxWeights pb;
  pb.sender = break_sticks(params.sender, truncation, rng, pb.sender_tail);
  pb.global = break_sticks(params.global, truncation, rng, pb.global_tail);

  pb.local.resize(pb.sender.size());
  pb.local_tail.resize(pb.sender.size());
  for (std::size_t s = 0; s < pb.sender.size(); ++s) {
    const double theta_s = params.local_for(sender_id(static_cast<std::uint32_t>(s))).concentration;
    pb.local[s] = local_frequencies(pb.global, pb.global_tail, theta_s, rng, pb.local_tail[s]);
  }
  return pb;
}

InteractionLog hollywood_simulate(std::size_t n, const PitmanYor& urn,
                                  const Categorical& receivers_per_interaction, Rng& rng) {
  validate_population_urn(urn, "hollywood urn");
  receivers_per_interaction.validate();
  InteractionLog log(/*shared_population=*/true);
  std::vector<std::uint32_t> distinct;
  std::vector<std::uint32_t> repeats;
  std::vector<std::uint64_t> counts;
  auto draw = [&]() {
    std::uint32_t id = 0;
    if (auto hit = draw_from_urn(distinct, repeats, urn.discount, urn.concentration, rng)) {
      id = *hit;
    } else {
      id = static_cast<std::uint32_t>(counts.size());
      counts.push_back(0);
      log.intern_sender("v" + std::to_string(id + 1));
    }
    if (counts[id]++ == 0) {
      distinct.push_back(id);
    } else {
      repeats.push_back(id);
    }
    return id;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = receivers_per_interaction.sample(rng);
    std::vector<SenderId> senders{sender_id(draw())};
    std::vector<ReceiverId> receivers;
    for (std::size_t j = 0; j < k; ++j) receivers.push_back(receiver_id(draw()));
    log.append(std::move(senders), std::move(receivers));
  }
  return log;
}

}  // namespace hvcm
