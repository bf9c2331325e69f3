#pragma once

// Reference computations written directly from the model's sequential
// definitions. They share no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hvcm/generative.hpp"
#include "hvcm/interaction.hpp"
#include "hvcm/params.hpp"
#include "hvcm/random.hpp"

namespace oracle {

using hvcm::HvcmParams;
using hvcm::InteractionLog;
using hvcm::PitmanYor;
using hvcm::ReceiverId;
using hvcm::SenderId;

// Random log with senders drawn from s0..s{senders-1} and receivers from
// r0..r{receivers-1}; multi-sender records appear when max_k1 > 1.
inline InteractionLog random_log(std::size_t n, std::size_t senders, std::size_t receivers,
                                 std::size_t max_k1, std::size_t max_k2, hvcm::Rng& rng) {
  InteractionLog log;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> s(1 + rng.uniform_index(max_k1));
    std::vector<std::string> r(1 + rng.uniform_index(max_k2));
    for (auto& x : s) x = "s" + std::to_string(rng.uniform_index(senders));
    for (auto& x : r) x = "r" + std::to_string(rng.uniform_index(receivers));
    log.append_named(s, r);
  }
  return log;
}

// Same records under fresh names given by permutations of the two vocabularies.
inline InteractionLog relabel(const InteractionLog& log, hvcm::Rng& rng) {
  std::vector<std::uint32_t> ps(log.num_sender_ids()), pr(log.num_receiver_ids());
  std::iota(ps.begin(), ps.end(), 0u);
  std::iota(pr.begin(), pr.end(), 0u);
  std::shuffle(ps.begin(), ps.end(), rng.engine());
  std::shuffle(pr.begin(), pr.end(), rng.engine());
  InteractionLog out(log.shared_population());
  for (const auto& rec : log.records()) {
    std::vector<std::string> s, r;
    for (auto x : rec.senders) s.push_back("x" + std::to_string(ps[hvcm::index(x)]));
    for (auto x : rec.receivers) {
      r.push_back((log.shared_population() ? "x" : "y") + std::to_string(
                      log.shared_population() ? ps[hvcm::index(x)] : pr[hvcm::index(x)]));
    }
    out.append_named(s, r);
  }
  return out;
}

// Probability of one draw from a Pitman-Yor urn: an item seen `count` times, or a
// new item when count == 0.
inline double urn_prob(double count, double distinct, double total, const PitmanYor& py) {
  const double w = count > 0 ? count - py.discount : py.concentration + py.discount * distinct;
  return w / (total + py.concentration);
}

// Sender factor: sequential urn draws, summed over the distinct orderings of every
// record's sender multiset.
inline double sender_probability(const InteractionLog& log, const PitmanYor& py) {
  std::map<std::uint32_t, double> out;
  double slots = 0;
  double p = 1.0;
  for (const auto& rec : log.records()) {
    std::vector<std::uint32_t> order;
    for (auto s : rec.senders) order.push_back(hvcm::index(s));
    std::sort(order.begin(), order.end());
    double sum = 0.0;
    do {
      auto counts = out;
      double q = 1.0;
      double t = slots;
      for (auto s : order) {
        q *= urn_prob(counts[s], double(std::count_if(counts.begin(), counts.end(),
                                                      [](auto& kv) { return kv.second > 0; })),
                      t, py);
        counts[s] += 1;
        t += 1;
      }
      sum += q;
    } while (std::next_permutation(order.begin(), order.end()));
    p *= sum;
    for (auto s : rec.senders) out[hvcm::index(s)] += 1;
    slots += double(rec.senders.size());
  }
  return p;
}

// Attribution factor: record n picks Z_n among its distinct senders with weights
// D_z(s) - alpha for previously attributed senders and theta + alpha |S_z| otherwise.
inline double attribution_probability(const InteractionLog& log,
                                      const std::vector<SenderId>& z, const PitmanYor& py) {
  std::map<std::uint32_t, double> count;
  double p = 1.0;
  for (std::size_t n = 0; n < log.size(); ++n) {
    std::set<std::uint32_t> cand;
    for (auto s : log[n].senders) cand.insert(hvcm::index(s));
    auto w = [&](std::uint32_t s) {
      auto it = count.find(s);
      return it != count.end() ? it->second - py.discount
                               : py.concentration + py.discount * double(count.size());
    };
    double norm = 0.0;
    for (auto s : cand) norm += w(s);
    p *= w(hvcm::index(z[n])) / norm;
    count[hvcm::index(z[n])] += 1;
  }
  return p;
}

inline double size_probability(const InteractionLog& log, const std::vector<SenderId>& z,
                               const HvcmParams& params) {
  double p = 1.0;
  for (std::size_t n = 0; n < log.size(); ++n) {
    p *= params.sender_size.prob(log[n].senders.size());
    p *= params.receiver_size_for(z[n]).prob(log[n].receivers.size());
  }
  return p;
}

// Counts of the canonical sequential process.
struct SequentialState {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> degree;  // D(s, r)
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> latent;  // V(s, r)
  std::map<std::uint32_t, double> label;                             // V(., r)
  std::map<std::uint32_t, double> sender_total;                      // m(s)
  std::map<std::uint32_t, double> sender_tables;                     // V(s, .)
  double m = 0;
};

// Shared-urn probability of label r for a new latent vertex.
inline double label_probability(const SequentialState& st, std::uint32_t r,
                                const PitmanYor& g) {
  if (st.m == 0) return 1.0;
  auto it = st.label.find(r);
  const double v = it == st.label.end() ? 0.0 : it->second;
  if (v > 0) return (v - g.discount) / (st.m + g.concentration);
  return (g.concentration + g.discount * double(st.label.size())) / (st.m + g.concentration);
}

inline void escape(SequentialState& st, std::uint32_t s, std::uint32_t r) {
  st.latent[{s, r}] += 1;
  st.label[r] += 1;
  st.sender_tables[s] += 1;
  st.m += 1;
}

// Probability of the observation sequence obs[i..] by enumerating, at every
// repeated local pair, whether the draw escaped to the shared level.
inline double receiver_paths(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& obs,
                             std::size_t i, const SequentialState& st, const HvcmParams& params) {
  if (i == obs.size()) return 1.0;
  const auto [s, r] = obs[i];
  const auto& local = params.local_for(hvcm::sender_id(s));
  auto get = [](const auto& map, const auto& key) {
    auto it = map.find(key);
    return it == map.end() ? 0.0 : it->second;
  };
  const double d = get(st.degree, std::pair{s, r});
  const double v = get(st.latent, std::pair{s, r});
  const double ms = get(st.sender_total, s);
  const double ts = get(st.sender_tables, s);
  const double denom = ms + local.concentration;
  const double esc = (local.concentration + local.discount * ts) / denom *
                     label_probability(st, r, params.global);
  double total = 0.0;
  {
    SequentialState next = st;
    escape(next, s, r);
    next.degree[{s, r}] += 1;
    next.sender_total[s] += 1;
    if (esc > 0) total += esc * receiver_paths(obs, i + 1, next, params);
  }
  if (d > 0) {
    const double stay = (d - local.discount * v) / denom;
    SequentialState next = st;
    next.degree[{s, r}] += 1;
    next.sender_total[s] += 1;
    if (stay > 0) total += stay * receiver_paths(obs, i + 1, next, params);
  }
  return total;
}

inline double receiver_probability(const InteractionLog& log, const std::vector<SenderId>& z,
                                   const HvcmParams& params) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> obs;
  for (std::size_t n = 0; n < log.size(); ++n) {
    for (auto r : log[n].receivers) obs.emplace_back(hvcm::index(z[n]), hvcm::index(r));
  }
  return receiver_paths(obs, 0, SequentialState{}, params);
}

// Marginal probability of a log under the sequential process, summing over every
// attribution of multi-sender records.
inline double sequential_marginal(const InteractionLog& log, const HvcmParams& params) {
  std::vector<std::vector<SenderId>> choices;
  for (const auto& rec : log.records()) choices.push_back(rec.distinct_senders());
  std::vector<SenderId> z(log.size());
  double total = 0.0;
  auto rec = [&](auto&& self, std::size_t n) -> void {
    if (n == log.size()) {
      total += attribution_probability(log, z, params.z) * size_probability(log, z, params) *
               receiver_probability(log, z, params);
      return;
    }
    for (auto s : choices[n]) {
      z[n] = s;
      self(self, n + 1);
    }
  };
  rec(rec, 0);
  return total * sender_probability(log, params.sender);
}

// Paintbox Monte Carlo predictive for the alpha_s = 0 model after the single-sender
// history (r1), (r2), (r1): each draw of global sticks and one sender's local
// frequencies is weighted by the history's likelihood, a sum over injective maps
// of the two history labels to atoms. Returns {P(r1), P(r2), P(new)}.
struct PaintboxPredictive {
  std::vector<double> probs;
  double global_tail = 0.0;      // largest truncation tail of the global sticks
  double mean_local_tail = 0.0;  // mean local mass beyond the truncation
};

inline PaintboxPredictive paintbox_predictive(const PitmanYor& global, double theta_s,
                                              std::size_t draws, hvcm::Rng& rng) {
  double w_hist = 0, w1 = 0, w2 = 0, wnew = 0;
  double max_tail = 0, local_tail = 0;
  hvcm::StickTruncation trunc;
  for (std::size_t t = 0; t < draws; ++t) {
    double gtail = 0, ltail = 0;
    std::vector<double> pi;
    {
      double remaining = 1.0;
      for (std::size_t i = 1;; ++i) {
        const double beta = rng.beta(1.0 - global.discount,
                                     global.concentration + double(i) * global.discount);
        pi.push_back(remaining * beta);
        remaining *= 1.0 - beta;
        if (remaining < *trunc.tail_tolerance) break;
      }
      gtail = remaining;
    }
    auto f = hvcm::local_frequencies(pi, gtail, theta_s, rng, ltail);
    max_tail = std::max(max_tail, gtail);
    local_tail += ltail / double(draws);
    double p1 = 0, p2 = 0, p3 = 0, p4 = 0;
    for (double x : f) {
      p1 += x;
      p2 += x * x;
      p3 += x * x * x;
      p4 += x * x * x * x;
    }
    // sum over a != b of f_a^2 f_b, and its three one-step extensions.
    w_hist += p2 * p1 - p3;
    w1 += p3 * p1 - p4;
    w2 += p2 * p2 - p4;
    wnew += p2 * p1 * p1 - p2 * p2 - 2 * p3 * p1 + 2 * p4;
  }
  return {{w1 / w_hist, w2 / w_hist, wnew / w_hist}, max_tail, local_tail};
}

// Every single-sender log of n interactions whose receiver counts lie in `sizes`,
// labelled in order of first appearance with at most max_senders senders and
// max_receivers receivers. Distinct outputs are distinct label-equivalence classes.
inline std::vector<InteractionLog> enumerate_outcomes(std::size_t n,
                                                      const std::vector<std::size_t>& sizes,
                                                      std::size_t max_senders,
                                                      std::size_t max_receivers) {
  std::vector<InteractionLog> out;
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> recs;
  auto emit = [&] {
    InteractionLog log;
    for (auto& [s, rs] : recs) {
      std::vector<std::string> sn{std::to_string(s)}, rn;
      for (auto r : rs) rn.push_back(std::to_string(r));
      log.append_named(sn, rn);
    }
    out.push_back(std::move(log));
  };
  auto receivers = [&](auto&& self, std::size_t k, std::vector<std::size_t>& cur,
                       std::size_t used_r, auto&& cont) -> void {
    if (cur.size() == k) {
      cont(used_r);
      return;
    }
    for (std::size_t r = 0; r <= used_r && r < max_receivers; ++r) {
      cur.push_back(r);
      self(self, k, cur, std::max(used_r, r + 1), cont);
      cur.pop_back();
    }
  };
  auto rec = [&](auto&& self, std::size_t used_s, std::size_t used_r) -> void {
    if (recs.size() == n) {
      emit();
      return;
    }
    for (std::size_t s = 0; s <= used_s && s < max_senders; ++s) {
      for (auto k : sizes) {
        std::vector<std::size_t> cur;
        receivers(receivers, k, cur, used_r, [&](std::size_t ur) {
          recs.push_back({s, cur});
          self(self, std::max(used_s, s + 1), ur);
          recs.pop_back();
        });
      }
    }
  };
  rec(rec, 0, 0);
  return out;
}

}  // namespace oracle
