#include "hvcm/netstats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "hvcm/error.hpp"

namespace hvcm {

namespace {

template <class T>
void bump(std::vector<T>& hist, std::size_t k) {
  if (hist.size() <= k) hist.resize(k + 1, 0);
  ++hist[k];
}

// Accumulates one network's counts as interactions arrive.
class StatsBuilder {
 public:
  void add(const Interaction& rec) {
    ++stats_.e;
    bump(stats_.arity, rec.receivers.size());
    for (auto r : rec.receivers) {
      if (index(r) >= count_.size()) count_.resize(index(r) + 1, 0);
      if (count_[index(r)]++ == 0) ++stats_.v;
    }
  }

  NetStats finish() const {
    NetStats out = stats_;
    for (auto c : count_) {
      if (c > 0) bump(out.degree, c);
    }
    return out;
  }

  const NetStats& partial() const { return stats_; }

 private:
  NetStats stats_;
  std::vector<std::uint64_t> count_;
};

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error("slope: all abscissae coincide");
  return sxy / sxx;
}

}  // namespace

std::uint64_t NetStats::slots() const {
  std::uint64_t t = 0;
  for (std::size_t k = 0; k < arity.size(); ++k) t += k * arity[k];
  return t;
}

double NetStats::mean_arity() const {
  return e == 0 ? 0.0 : static_cast<double>(slots()) / static_cast<double>(e);
}

std::vector<double> NetStats::degree_distribution() const {
  std::vector<double> d(degree.size(), 0.0);
  if (v == 0) return d;
  for (std::size_t k = 0; k < degree.size(); ++k) {
    d[k] = static_cast<double>(degree[k]) / static_cast<double>(v);
  }
  return d;
}

NetStats compute_stats(const InteractionLog& log) {
  StatsBuilder b;
  for (const auto& rec : log.records()) b.add(rec);
  return b.finish();
}

std::vector<NetStats> local_stats(const InteractionLog& log) {
  std::vector<StatsBuilder> builders(log.num_sender_ids());
  for (const auto& rec : log.records()) {
    for (auto s : rec.distinct_senders()) builders[index(s)].add(rec);
  }
  std::vector<NetStats> out;
  out.reserve(builders.size());
  for (const auto& b : builders) out.push_back(b.finish());
  return out;
}

std::vector<std::size_t> geometric_checkpoints(std::size_t lo, std::size_t hi, std::size_t count) {
  if (lo == 0 || hi < lo || count == 0) throw Error("checkpoints: need 1 <= lo <= hi and count >= 1");
  std::vector<std::size_t> out;
  if (count == 1 || lo == hi) return {hi};
  const double ratio = std::log(static_cast<double>(hi) / static_cast<double>(lo));
  for (std::size_t i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(count - 1);
    auto n = static_cast<std::size_t>(std::llround(static_cast<double>(lo) * std::exp(ratio * f)));
    n = std::clamp(n, lo, hi);
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  return out;
}

std::vector<GrowthPoint> growth_curve(const InteractionLog& log,
                                      std::span<const std::size_t> checkpoints,
                                      std::optional<SenderId> sender) {
  std::vector<GrowthPoint> out;
  StatsBuilder b;
  std::size_t n = 0;
  for (std::size_t c : checkpoints) {
    if (c > log.size()) throw Error("growth curve: checkpoint beyond the log");
    if (c < n) throw Error("growth curve: checkpoints must be non-decreasing");
    for (; n < c; ++n) {
      if (!sender || log[n].lists_sender(*sender)) b.add(log[n]);
    }
    const auto& s = b.partial();
    out.push_back({c, s.v, s.e, s.mean_arity()});
  }
  return out;
}

double sparsity_slope(std::span<const GrowthPoint> points) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : points) {
    if (p.n == 0 || p.v == 0) continue;
    x.push_back(std::log(static_cast<double>(p.n)));
    y.push_back(std::log(static_cast<double>(p.v)));
  }
  if (x.size() < 2) throw Error("sparsity slope: fewer than 2 usable checkpoints");
  return least_squares_slope(x, y);
}

double sparsity_ratio(const GrowthPoint& point) {
  if (point.v == 0) return 0.0;
  return static_cast<double>(point.e) / std::pow(static_cast<double>(point.v), point.mean_arity);
}

double powerlaw_slope(std::span<const double> d, std::size_t k_lo, std::size_t k_hi) {
  if (k_lo == 0 || k_hi < k_lo) throw Error("power law: need 1 <= k_lo <= k_hi");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t k = k_lo; k <= k_hi && k < d.size(); ++k) {
    if (d[k] > 0.0) {
      x.push_back(std::log(static_cast<double>(k)));
      y.push_back(std::log(d[k]));
    }
  }
  if (x.size() < 5) throw Error("power law: fewer than 5 degrees with positive mass in range");
  return -least_squares_slope(x, y);
}

double yule_reference(double alpha, double k) {
  return alpha * std::pow(k, -(1.0 + alpha)) / std::tgamma(1.0 - alpha);
}

std::vector<std::uint64_t> node_sharing_histogram(const InteractionLog& log) {
  std::vector<std::vector<std::uint32_t>> senders_of(log.num_receiver_ids());
  for (const auto& rec : log.records()) {
    for (auto s : rec.distinct_senders()) {
      for (auto r : rec.receivers) senders_of[index(r)].push_back(index(s));
    }
  }
  std::vector<std::uint64_t> hist{0};
  for (auto& list : senders_of) {
    if (list.empty()) continue;
    std::sort(list.begin(), list.end());
    const auto distinct =
        static_cast<std::size_t>(std::unique(list.begin(), list.end()) - list.begin());
    bump(hist, distinct);
  }
  return hist;
}

double degree_distribution_distance(std::span<const double> d1, std::span<const double> d2,
                                    DistanceMetric metric) {
  auto check = [](std::span<const double> d) {
    double total = 0.0;
    for (double p : d) {
      if (!(p >= 0.0)) throw Error("distance: negative or NaN mass");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("distance: distribution is not normalised");
  };
  check(d1);
  check(d2);
  double l1 = 0.0;
  for (std::size_t k = 0; k < std::max(d1.size(), d2.size()); ++k) {
    const double a = k < d1.size() ? d1[k] : 0.0;
    const double b = k < d2.size() ? d2[k] : 0.0;
    l1 += std::abs(a - b);
  }
  return metric == DistanceMetric::L1 ? l1 : l1 / 2.0;
}

namespace {

double binary_entropy(double p1, double p2) {
  const double total = p1 + p2;
  // Both candidates carry no posterior mass: nothing distinguishes them.
  if (!(total > 0.0)) return 1.0;
  double h = 0.0;
  for (double q : {p1 / total, p2 / total}) {
    if (q > 0.0) h -= q * std::log2(q);
  }
  return h;
}

struct PairAccumulator {
  double sum = 0.0;
  std::size_t count = 0;
};

void check_trace(const GibbsTrace& trace, const InteractionLog& log) {
  if (trace.z_candidates.size() != trace.multi_sender.size() ||
      trace.z_posterior_mean.size() != trace.multi_sender.size()) {
    throw Error("subject overlap: trace attribution tables are inconsistent");
  }
  for (std::size_t k = 0; k < trace.multi_sender.size(); ++k) {
    if (trace.multi_sender[k] >= log.size()) {
      throw Error("subject overlap: trace refers to an interaction outside the log");
    }
    if (trace.z_candidates[k].size() != trace.z_posterior_mean[k].size()) {
      throw Error("subject overlap: candidate and probability counts differ");
    }
  }
}

}  // namespace

double subject_overlap(const GibbsTrace& trace, const InteractionLog& log, SenderId s1,
                       SenderId s2) {
  check_trace(trace, log);
  PairAccumulator acc;
  for (std::size_t k = 0; k < trace.multi_sender.size(); ++k) {
    const auto& cand = trace.z_candidates[k];
    auto i1 = std::find(cand.begin(), cand.end(), s1);
    auto i2 = std::find(cand.begin(), cand.end(), s2);
    if (i1 == cand.end() || i2 == cand.end() || s1 == s2) continue;
    const auto& p = trace.z_posterior_mean[k];
    acc.sum += binary_entropy(p[static_cast<std::size_t>(i1 - cand.begin())],
                              p[static_cast<std::size_t>(i2 - cand.begin())]);
    ++acc.count;
  }
  if (acc.count == 0) throw Error("subject overlap: no qualifying interactions");
  return acc.sum / static_cast<double>(acc.count);
}

std::vector<OverlapEntry> overlap_matrix(const GibbsTrace& trace, const InteractionLog& log) {
  check_trace(trace, log);
  std::map<std::pair<std::uint32_t, std::uint32_t>, PairAccumulator> pairs;
  for (std::size_t k = 0; k < trace.multi_sender.size(); ++k) {
    const auto& cand = trace.z_candidates[k];
    const auto& p = trace.z_posterior_mean[k];
    for (std::size_t a = 0; a < cand.size(); ++a) {
      for (std::size_t b = 0; b < cand.size(); ++b) {
        if (index(cand[a]) >= index(cand[b])) continue;
        auto& acc = pairs[{index(cand[a]), index(cand[b])}];
        acc.sum += binary_entropy(p[a], p[b]);
        ++acc.count;
      }
    }
  }
  if (pairs.empty()) throw Error("subject overlap: no qualifying interactions");
  std::vector<OverlapEntry> out;
  out.reserve(pairs.size());
  for (const auto& [key, acc] : pairs) {
    out.push_back({sender_id(key.first), sender_id(key.second),
                   acc.sum / static_cast<double>(acc.count), acc.count});
  }
  return out;
}

}  // namespace hvcm
