#include "hvcm/ppc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "hvcm/error.hpp"
#include "hvcm/generative.hpp"
#include "hvcm/netstats.hpp"

namespace hvcm {

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HVCM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

std::vector<std::size_t> thinned_iterations(const GibbsTrace& trace, std::size_t m) {
  if (m == 0) return {};
  const std::size_t from = trace.burn_in < trace.size() ? trace.burn_in : trace.size();
  const std::size_t kept = trace.size() - from;
  if (kept < m) {
    throw Error("ppc: trace has " + std::to_string(kept) +
                " post-burn-in samples, fewer than the requested replicates");
  }
  std::vector<std::size_t> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(from + i * kept / m);
  return out;
}

std::vector<InteractionLog> generate_replicates(const GibbsTrace& trace, const InteractionLog& log,
                                                std::size_t m, std::uint64_t seed) {
  const auto iters = thinned_iterations(trace, m);
  std::vector<InteractionLog> out(m);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < m; i = next++) {
      try {
        Rng rng(derive_seed(seed, i));
        out[i] = simulate_conditional(log, trace.params_at(iters[i]), rng).log;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_count(m);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  if (m > 0) work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::pair<double, double> interval(std::span<const double> values, double level) {
  if (values.size() < 2) throw Error("interval: need at least two values");
  if (!(level > 0.0 && level < 1.0)) throw Error("interval: level must lie in (0, 1)");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  const double tail = (1.0 - level) / 2.0;
  return {quantile(tail), quantile(1.0 - tail)};
}

namespace {

StatInterval make_interval(std::string name, std::vector<double> values, double actual,
                           double level) {
  StatInterval s;
  s.statistic = std::move(name);
  s.values = std::move(values);
  std::tie(s.lo, s.hi) = interval(s.values, level);
  s.actual = actual;
  s.covered = s.lo <= actual && actual <= s.hi;
  return s;
}

std::string degree_name(std::size_t k) { return "receivers_degree_" + std::to_string(k); }

}  // namespace

PpcReport coverage_report(std::span<const InteractionLog> replicates, const InteractionLog& log,
                          const PpcConfig& config) {
  if (replicates.size() < 2) throw Error("ppc: need at least two replicates");
  PpcReport report;
  report.level = config.level;
  report.replicates = replicates.size();

  const auto observed = compute_stats(log);
  const auto observed_local = local_stats(log);
  const auto observed_sharing = node_sharing_histogram(log);
  const auto observed_d = observed.degree_distribution();

  std::vector<NetStats> rep_global;
  std::vector<std::vector<NetStats>> rep_local;
  std::vector<std::vector<std::uint64_t>> rep_sharing;
  for (const auto& rep : replicates) {
    if (rep.size() != log.size()) throw Error("ppc: replicate length differs from the log");
    rep_global.push_back(compute_stats(rep));
    rep_local.push_back(local_stats(rep));
    rep_sharing.push_back(node_sharing_histogram(rep));
    if (rep_local.back().size() < observed_local.size()) {
      rep_local.back().resize(observed_local.size());
    }
  }

  auto collect = [&](auto&& f) {
    std::vector<double> v;
    v.reserve(replicates.size());
    for (std::size_t i = 0; i < replicates.size(); ++i) v.push_back(f(i));
    return v;
  };

  report.global.push_back(make_interval(
      "unique_receivers", collect([&](std::size_t i) { return double(rep_global[i].v); }),
      double(observed.v), config.level));
  for (std::size_t k : config.degree_thresholds) {
    report.global.push_back(make_interval(
        degree_name(k),
        collect([&](std::size_t i) { return double(rep_global[i].receivers_with_degree(k)); }),
        double(observed.receivers_with_degree(k)), config.level));
  }
  std::size_t max_share = observed_sharing.size();
  for (const auto& h : rep_sharing) max_share = std::max(max_share, h.size());
  for (std::size_t c = 1; c < max_share; ++c) {
    auto at = [c](const std::vector<std::uint64_t>& h) {
      return c < h.size() ? double(h[c]) : 0.0;
    };
    report.global.push_back(make_interval(
        "shared_by_" + std::to_string(c), collect([&](std::size_t i) { return at(rep_sharing[i]); }),
        at(observed_sharing), config.level));
  }
  for (auto [metric, name] : {std::pair{DistanceMetric::L1, "degree_distance_l1"},
                              std::pair{DistanceMetric::TV, "degree_distance_tv"}}) {
    if (observed.v == 0) break;
    report.global.push_back(make_interval(
        name,
        collect([&](std::size_t i) {
          return degree_distribution_distance(rep_global[i].degree_distribution(), observed_d,
                                              metric);
        }),
        0.0, config.level));
  }

  CoverageRate unique_rate{"unique_receivers", 0, 0};
  std::vector<CoverageRate> degree_rates;
  for (std::size_t k : config.degree_thresholds) degree_rates.push_back({degree_name(k), 0, 0});
  for (std::uint32_t s = 0; s < observed_local.size(); ++s) {
    const auto& obs = observed_local[s];
    if (obs.e == 0) continue;
    const SenderId sid = sender_id(s);
    auto stat = make_interval(
        "unique_receivers", collect([&](std::size_t i) { return double(rep_local[i][s].v); }),
        double(obs.v), config.level);
    ++unique_rate.eligible;
    unique_rate.covered += stat.covered ? 1 : 0;
    report.local.push_back({sid, std::move(stat)});
    for (std::size_t t = 0; t < config.degree_thresholds.size(); ++t) {
      const std::size_t k = config.degree_thresholds[t];
      if (obs.receivers_with_degree(k) == 0) continue;
      auto ds = make_interval(
          degree_name(k),
          collect([&](std::size_t i) { return double(rep_local[i][s].receivers_with_degree(k)); }),
          double(obs.receivers_with_degree(k)), config.level);
      ++degree_rates[t].eligible;
      degree_rates[t].covered += ds.covered ? 1 : 0;
      report.local.push_back({sid, std::move(ds)});
    }
  }
  report.rates.push_back(unique_rate);
  for (auto& r : degree_rates) report.rates.push_back(r);
  return report;
}

}  // namespace hvcm
