#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hvcm/error.hpp"
#include "hvcm/generative.hpp"
#include "hvcm/netstats.hpp"
#include "oracles.hpp"

using namespace hvcm;

namespace {

InteractionLog log_of(std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> recs) {
  InteractionLog log;
  for (auto& [s, r] : recs) log.append_named(s, r);
  return log;
}

void check_conservation(const NetStats& st) {
  std::uint64_t sum_n = 0, sum_m = 0, kn = 0, km = 0;
  for (std::size_t k = 1; k < st.degree.size(); ++k) {
    sum_n += st.degree[k];
    kn += k * st.degree[k];
  }
  for (std::size_t k = 1; k < st.arity.size(); ++k) {
    sum_m += st.arity[k];
    km += k * st.arity[k];
  }
  CHECK(sum_n == st.v);
  CHECK(sum_m == st.e);
  CHECK(kn == km);
  if (st.v > 0) {
    auto d = st.degree_distribution();
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

// Trace carrying only the attribution summaries used by the overlap score.
GibbsTrace overlap_trace(const InteractionLog& log, std::vector<std::vector<double>> probs) {
  GibbsTrace t;
  for (std::size_t n = 0; n < log.size(); ++n) {
    if (log[n].distinct_senders().size() > 1) {
      t.multi_sender.push_back(n);
      t.z_candidates.push_back(log[n].distinct_senders());
    }
  }
  t.z_posterior_mean = std::move(probs);
  return t;
}

}  // namespace

TEST_CASE("global statistics") {
  CHECK(compute_stats(InteractionLog{}) == NetStats{});
  auto log = log_of({{{"a"}, {"b", "c"}}, {{"a"}, {"b"}}});
  auto st = compute_stats(log);
  CHECK(st.v == 2);
  CHECK(st.e == 2);
  CHECK(st.receivers_with_degree(1) == 1);
  CHECK(st.receivers_with_degree(2) == 1);
  CHECK(st.mean_arity() == 1.5);
  CHECK(st.arity == std::vector<std::uint64_t>{0, 1, 1});
  check_conservation(st);
}

TEST_CASE("conservation identities on random logs") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    auto log = oracle::random_log(1 + rng.uniform_index(60), 6, 30, 3, 5, rng);
    auto st = compute_stats(log);
    check_conservation(st);
    for (const auto& local : local_stats(log)) check_conservation(local);
    std::vector<std::size_t> half;
    for (std::size_t n = 0; n < log.size(); n += 2) half.push_back(n);
    check_conservation(compute_stats(restrict_log(log, half)));
  }
}

TEST_CASE("arity and interaction counts are additive over a partition") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    auto log = oracle::random_log(50, 4, 20, 2, 6, rng);
    std::vector<std::size_t> a, b;
    for (std::size_t n = 0; n < log.size(); ++n) (rng.bernoulli(0.5) ? a : b).push_back(n);
    auto sa = compute_stats(restrict_log(log, a));
    auto sb = compute_stats(restrict_log(log, b));
    auto s = compute_stats(log);
    CHECK(sa.e + sb.e == s.e);
    for (std::size_t k = 1; k < s.arity.size(); ++k) {
      auto at = [k](const NetStats& x) { return k < x.arity.size() ? x.arity[k] : 0; };
      CHECK(at(sa) + at(sb) == s.arity[k]);
    }
  }
}

TEST_CASE("local statistics use set semantics for multi-sender records") {
  auto log = log_of({{{"a", "a", "b"}, {"x", "y"}}, {{"a"}, {"x"}}});
  auto local = local_stats(log);
  REQUIRE(local.size() == 2);
  CHECK(local[0].e == 2);
  CHECK(local[0].v == 2);
  CHECK(local[0].receivers_with_degree(2) == 1);
  CHECK(local[1].e == 1);
  CHECK(local[1].v == 2);
}

TEST_CASE("sparsity slope") {
  std::vector<GrowthPoint> pts;
  for (std::size_t n : {10, 100, 1000, 10000, 100000}) pts.push_back({n, n, n, 1.0});
  CHECK(sparsity_slope(pts) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<GrowthPoint> one{{10, 5, 10, 1.0}};
  CHECK_THROWS_AS(sparsity_slope(one), Error);
  CHECK(sparsity_ratio({100, 50, 100, 2.0}) == doctest::Approx(100.0 / 2500.0));
}

TEST_CASE("growth curve and checkpoints") {
  auto cps = geometric_checkpoints(10, 1000, 5);
  CHECK(cps.front() == 10);
  CHECK(cps.back() == 1000);
  CHECK(std::is_sorted(cps.begin(), cps.end()));
  auto log = log_of({{{"a"}, {"x"}}, {{"b"}, {"y"}}, {{"a"}, {"x", "z"}}});
  std::vector<std::size_t> at{1, 2, 3};
  auto g = growth_curve(log, at);
  CHECK(g[0].v == 1);
  CHECK(g[2].v == 3);
  CHECK(g[2].mean_arity == doctest::Approx(4.0 / 3.0));
  auto ga = growth_curve(log, at, sender_id(0));
  CHECK(ga[1].e == 1);
  CHECK(ga[2].v == 2);
}

TEST_CASE("power-law slope") {
  std::vector<double> d(10001, 0.0);
  double zeta = 0;
  for (int k = 1; k <= 10000; ++k) zeta += std::pow(k, -1.5);
  for (int k = 1; k <= 10000; ++k) d[k] = std::pow(k, -1.5) / zeta;
  CHECK(std::abs(powerlaw_slope(d, 1, 10000) - 1.5) < 0.01);
  std::vector<double> sparse{0, 0.5, 0.5};
  CHECK_THROWS_AS(powerlaw_slope(sparse, 1, 2), Error);
  CHECK(yule_reference(0.5, 1.0) == doctest::Approx(0.5 / std::tgamma(0.5)).epsilon(1e-12));
  CHECK(yule_reference(0.5, 1.0) == doctest::Approx(0.2821).epsilon(1e-3));
}

TEST_CASE("slopes are invariant under relabeling") {
  Rng rng(3);
  HvcmParams p;
  p.sender = {0.3, 2.0};
  p.global = {0.5, 5.0};
  p.default_local = {0.6, 2.0};
  p.sender_size = Categorical::degenerate(1);
  auto sim = simulate(3000, p, rng);
  auto other = oracle::relabel(sim.log, rng);
  auto cps = geometric_checkpoints(100, 3000, 8);
  auto g1 = growth_curve(sim.log, cps), g2 = growth_curve(other, cps);
  CHECK(sparsity_slope(g1) == sparsity_slope(g2));
  auto d1 = compute_stats(sim.log).degree_distribution();
  auto d2 = compute_stats(other).degree_distribution();
  CHECK(powerlaw_slope(d1, 1, 30) == powerlaw_slope(d2, 1, 30));
}

TEST_CASE("node sharing") {
  auto single = log_of({{{"a"}, {"x", "y"}}, {{"a"}, {"z"}}});
  auto h = node_sharing_histogram(single);
  CHECK(h == std::vector<std::uint64_t>{0, 3});
  auto shared = log_of({{{"a"}, {"x"}}, {{"b"}, {"x"}}});
  h = node_sharing_histogram(shared);
  REQUIRE(h.size() == 3);
  CHECK(h[2] == 1);
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    auto log = oracle::random_log(40, 5, 25, 2, 3, rng);
    auto hist = node_sharing_histogram(log);
    CHECK(std::accumulate(hist.begin(), hist.end(), std::uint64_t{0}) == compute_stats(log).v);
  }
}

TEST_CASE("degree distribution distances") {
  std::vector<double> a{0, 0.5, 0.5}, b{0, 1.0, 0.0}, c{0, 0, 0, 1.0};
  CHECK(degree_distribution_distance(a, a, DistanceMetric::L1) == 0.0);
  CHECK(degree_distribution_distance(b, c, DistanceMetric::L1) == doctest::Approx(2.0));
  CHECK(degree_distribution_distance(b, c, DistanceMetric::TV) == doctest::Approx(1.0));
  CHECK(degree_distribution_distance(a, b, DistanceMetric::L1) == doctest::Approx(1.0));
  std::vector<double> bad{0, 0.5};
  CHECK_THROWS_AS(degree_distribution_distance(bad, a, DistanceMetric::L1), Error);
}

TEST_CASE("subject overlap") {
  auto log = log_of({{{"a", "b"}, {"x"}}, {{"a", "b", "c"}, {"y"}}, {{"a"}, {"z"}}});
  auto certain = overlap_trace(log, {{1.0, 0.0}, {1.0, 0.0, 0.0}});
  CHECK(subject_overlap(certain, log, sender_id(0), sender_id(1)) == 0.0);
  auto uniform = overlap_trace(log, {{0.5, 0.5}, {0.25, 0.25, 0.5}});
  CHECK(subject_overlap(uniform, log, sender_id(0), sender_id(1)) == doctest::Approx(1.0));
  auto mixed = overlap_trace(log, {{0.8, 0.2}, {0.1, 0.3, 0.6}});
  const double so = subject_overlap(mixed, log, sender_id(0), sender_id(1));
  CHECK(so == doctest::Approx(subject_overlap(mixed, log, sender_id(1), sender_id(0))));
  CHECK(so >= 0.0);
  CHECK(so <= 1.0);
  auto h2 = [](double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); };
  CHECK(so == doctest::Approx((h2(0.8) + h2(0.25)) / 2));
  CHECK_THROWS_AS(subject_overlap(mixed, log, sender_id(0), sender_id(0)), Error);
  auto pairs = overlap_matrix(mixed, log);
  CHECK(pairs.size() == 3);
  for (const auto& e : pairs) {
    CHECK(index(e.s1) < index(e.s2));
    CHECK(e.interactions >= 1);
  }
  auto none = log_of({{{"a"}, {"x"}}});
  CHECK_THROWS_AS(subject_overlap(overlap_trace(none, {}), none, sender_id(0), sender_id(0)),
                  Error);
}
