#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "hvcm/error.hpp"
#include "hvcm/generative.hpp"
#include "hvcm/inference.hpp"
#include "hvcm/seating.hpp"
#include "oracles.hpp"

using namespace hvcm;

namespace {

HvcmParams base_params() {
  HvcmParams p;
  p.sender = {0.3, 2.0};
  p.global = {0.4, 3.0};
  p.default_local = {0.5, 1.5};
  p.z = {0.25, 0.8};
  p.sender_size = Categorical{{0.7, 0.3}};
  p.default_receiver_size = Categorical::uniform(1, 3);
  return p;
}

InteractionLog log_of(std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> recs) {
  InteractionLog log;
  for (auto& [s, r] : recs) log.append_named(s, r);
  return log;
}

// Exact probability of the receivers of interaction i seated under sender s,
// summing over every seat path, starting from the counts of `st` with i removed.
double exact_seat_paths(const SeatingState& st, std::size_t i, SenderId s,
                        const HvcmParams& params) {
  struct Counts {
    std::vector<std::pair<std::uint32_t, double>> tables;  // (label, degree) of sender s
    std::map<std::uint32_t, double> label;
    double m = 0, ms = 0;
  };
  Counts c;
  for (const auto& tab : st.arena(s)) {
    if (tab.degree > 0) c.tables.push_back({index(tab.label), double(tab.degree)});
  }
  for (std::uint32_t r = 0; r < st.label_tables().size(); ++r) {
    if (st.label_tables()[r] > 0) c.label[r] = double(st.label_tables()[r]);
  }
  c.m = double(st.grand_total());
  c.ms = double(st.sender_total(s));
  const auto& rs = st.log()[i].receivers;
  const auto& local = params.local_for(s);
  const auto& g = params.global;
  auto rec = [&](auto&& self, std::size_t j, const Counts& cur) -> double {
    if (j == rs.size()) return 1.0;
    const auto r = index(rs[j]);
    const double denom = cur.ms + local.concentration;
    double total = 0;
    for (std::size_t t = 0; t < cur.tables.size(); ++t) {
      if (cur.tables[t].first != r) continue;
      Counts next = cur;
      next.tables[t].second += 1;
      next.ms += 1;
      total += (cur.tables[t].second - local.discount) / denom * self(self, j + 1, next);
    }
    double label_p = 1.0;
    if (cur.m > 0) {
      auto it = cur.label.find(r);
      label_p = it != cur.label.end()
                    ? (it->second - g.discount) / (cur.m + g.concentration)
                    : (g.concentration + g.discount * double(cur.label.size())) /
                          (cur.m + g.concentration);
    }
    Counts next = cur;
    next.tables.push_back({r, 1});
    next.label[r] += 1;
    next.m += 1;
    next.ms += 1;
    total += (local.concentration + local.discount * double(cur.tables.size())) / denom *
             label_p * self(self, j + 1, next);
    return total;
  };
  return rec(rec, 0, c);
}

}  // namespace

TEST_CASE("prior presets") {
  auto c = default_priors(PriorPreset::Conjugate);
  CHECK(c.theta == GammaPrior{1, 10000});
  CHECK(c.alpha == BetaPrior{1, 1});
  CHECK(c.local_theta == GammaPrior{1, 1000});
  CHECK(c.local_alpha.kind == LocalAlphaPrior::Kind::Tied);
  CHECK(c.local_alpha.phi == 10.0);
  auto e = default_priors(PriorPreset::Enron);
  CHECK(e.theta == GammaPrior{2, 1000});
  CHECK(e.alpha == BetaPrior{1, 1});
  CHECK(e.local_theta == GammaPrior{1, 20});
  CHECK(e.local_alpha.kind == LocalAlphaPrior::Kind::Fixed);
  CHECK(e.local_alpha.fixed == BetaPrior{1, 0.9});
  CHECK(default_priors(PriorPreset::HollywoodFitted).hollywood_local_theta);
  CHECK(hollywood_theta_prior(200) == GammaPrior{2, 100});
}

TEST_CASE("auxiliary draws on degenerate counts") {
  Rng rng(1);
  std::vector<std::uint64_t> one{1};
  auto aux = draw_auxiliary(one, {0.5, 2.0}, rng);
  CHECK(aux.log_x == 0.0);
  CHECK(aux.y_count == 0);
  CHECK(aux.z_count == 0);
  std::vector<std::uint64_t> counts{3, 0, 1, 2};
  aux = draw_auxiliary(counts, {0.5, 2.0}, rng);
  CHECK(aux.log_x < 0.0);
  CHECK(aux.y_count == 2);
  CHECK(aux.z_count == 3);
  CHECK(aux.y_ones <= aux.y_count);
  CHECK(aux.z_zeros <= aux.z_count);
}

TEST_CASE("conjugate updates reduce to the prior without data") {
  Rng rng(2);
  AuxiliaryDraws none;
  const int n = 20000;
  double mean_theta = 0, mean_alpha = 0;
  for (int i = 0; i < n; ++i) {
    mean_theta += sample_concentration(none, {2.0, 3.0}, rng) / n;
    AuxiliaryDraws ones;
    ones.y_ones = ones.y_count = 5;
    mean_alpha += sample_discount(ones, {2.0, 3.0}, rng) / n;
  }
  CHECK(mean_theta == doctest::Approx(6.0).epsilon(0.03));
  CHECK(mean_alpha == doctest::Approx(0.4).epsilon(0.01));
}

TEST_CASE("concentration update targets the conditional posterior") {
  // Frozen label counts; alternate auxiliaries and theta with alpha fixed.
  const std::vector<std::uint64_t> counts{3, 1, 2};
  const double alpha = 0.3;
  const GammaPrior prior{1.0, 10.0};
  const std::size_t k = 3, m = 6;
  auto log_target = [&](double th) {
    double v = -th / prior.scale + (prior.shape - 1) * std::log(th);
    for (std::size_t i = 1; i < k; ++i) v += std::log(th + alpha * double(i));
    v += std::lgamma(th + 1) - std::lgamma(th + double(m));
    return v;
  };
  // Quadrature CDF on a fine grid, then 20 equiprobable bins.
  const double hi = 400, h = 1e-3;
  std::vector<double> grid, cdf;
  double acc = 0;
  for (double th = h / 2; th < hi; th += h) {
    acc += std::exp(log_target(th)) * h;
    grid.push_back(th + h / 2);
    cdf.push_back(acc);
  }
  for (auto& c : cdf) c /= acc;
  const int bins = 20;
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) {
    edges.push_back(grid[std::lower_bound(cdf.begin(), cdf.end(), double(b) / bins) - cdf.begin()]);
  }
  Rng rng(3);
  double theta = 1.0;
  std::vector<double> freq(bins);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto aux = draw_auxiliary(counts, {alpha, theta}, rng);
    theta = sample_concentration(aux, prior, rng);
    const auto b = std::upper_bound(edges.begin(), edges.end(), theta) - edges.begin();
    freq[b] += 1.0 / n;
  }
  double tv = 0;
  for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(freq[b] - 1.0 / bins);
  CHECK(tv < 0.02);
}

TEST_CASE("gibbs iteration keeps invariants and support") {
  Rng rng(4);
  HvcmParams truth = base_params();
  auto sim = simulate(150, truth, rng);
  auto st = SeatingState::sequential(sim.log, sim.attribution, truth, rng);
  for (auto preset : {PriorPreset::Conjugate, PriorPreset::Enron}) {
    auto priors = default_priors(preset);
    HvcmParams p = truth;
    for (int it = 0; it < 30; ++it) {
      gibbs_iteration(st, p, priors, rng);
      st.audit();
      CHECK(p.global.concentration > 0);
      CHECK(p.global.discount > 0);
      CHECK(p.global.discount < 1);
      for (std::uint32_t s = 0; s < sim.log.num_sender_ids(); ++s) {
        const auto& l = p.local_for(sender_id(s));
        CHECK(l.concentration > 0);
        CHECK(l.discount > 0);
        CHECK(l.discount < 1);
      }
      CHECK(std::isfinite(st.log_likelihood(p)));
    }
  }
}

TEST_CASE("gibbs iteration on a single observation") {
  auto log = log_of({{{"a"}, {"r"}}});
  Rng rng(5);
  HvcmParams p = base_params();
  auto st = SeatingState::sequential(log, {sender_id(0)}, p, rng);
  auto priors = default_priors(PriorPreset::Conjugate);
  auto summary = gibbs_iteration(st, p, priors, rng);
  CHECK(summary.global.log_x == 0.0);
  CHECK(summary.global.y_count == 0);
  CHECK(p.global.concentration > 0);
}

TEST_CASE("fit is deterministic and stays in support") {
  Rng rng(6);
  auto sim = simulate(80, base_params(), rng);
  FitConfig cfg;
  cfg.iterations = 40;
  cfg.burn_in = 20;
  cfg.seed = 99;
  cfg.z_mc_samples = 5;
  auto priors = default_priors(PriorPreset::Conjugate);
  auto a = fit(sim.log, priors, cfg);
  auto b = fit(sim.log, priors, cfg);
  REQUIRE(a.size() == 40);
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a.records[t].log_likelihood == b.records[t].log_likelihood);
    CHECK(a.records[t].global == b.records[t].global);
    CHECK(a.local[t] == b.local[t]);
    CHECK(std::isfinite(a.records[t].log_likelihood));
  }
  CHECK(a.z_samples == b.z_samples);
  CHECK(a.z_posterior_mean == b.z_posterior_mean);
  CHECK(a.multi_sender.size() == a.z_candidates.size());
  for (const auto& probs : a.z_posterior_mean) {
    double sum = 0;
    for (double q : probs) sum += q;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  cfg.seed = 100;
  auto c = fit(sim.log, priors, cfg);
  CHECK(c.records.back().log_likelihood != a.records.back().log_likelihood);
}

TEST_CASE("fit on a one-interaction log") {
  auto log = log_of({{{"a"}, {"r"}}});
  FitConfig cfg;
  cfg.iterations = 20;
  cfg.burn_in = 10;
  auto trace = fit(log, default_priors(PriorPreset::Conjugate), cfg);
  for (const auto& rec : trace.records) {
    CHECK(rec.global.concentration > 0);
    CHECK(rec.global.discount > 0);
    CHECK(rec.global.discount < 1);
  }
}

TEST_CASE("fit log-likelihood is finite on random logs") {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    auto log = oracle::random_log(40, 5, 20, 2, 4, rng);
    FitConfig cfg;
    cfg.iterations = 15;
    cfg.burn_in = 5;
    cfg.seed = std::uint64_t(t);
    cfg.z_mc_samples = 3;
    cfg.sample_sender_params = t % 2 == 1;
    auto priors = default_priors(t % 3 == 0 ? PriorPreset::HollywoodFitted : PriorPreset::Conjugate);
    auto trace = fit(log, priors, cfg);
    for (const auto& rec : trace.records) {
      CHECK(std::isfinite(rec.log_likelihood));
      CHECK(rec.sender.concentration > 0);
    }
  }
}

TEST_CASE("fit validates its configuration") {
  auto log = log_of({{{"a"}, {"r"}}});
  FitConfig cfg;
  cfg.iterations = 10;
  cfg.burn_in = 10;
  CHECK_THROWS_AS(fit(log, default_priors(PriorPreset::Conjugate), cfg), Error);
  CHECK_THROWS_AS(fit(InteractionLog{}, default_priors(PriorPreset::Conjugate), FitConfig{}), Error);
}

TEST_CASE("hollywood fit") {
  Rng rng(8);
  const GammaPrior tp{1.0, 10000.0};
  const BetaPrior ap{1.0, 1.0};
  std::vector<std::uint64_t> single{1};
  auto prior_only = hollywood_fit(single, tp, ap, 100, 50, rng);
  CHECK(prior_only.discount == doctest::Approx(0.5));
  CHECK(prior_only.concentration == doctest::Approx(10000.0));

  std::vector<std::uint64_t> repeated{200};
  auto rep = hollywood_fit(repeated, tp, ap, 400, 200, rng);
  CHECK(rep.discount < 0.5);
  CHECK(rep.concentration < 1.0);

  auto log = hollywood_simulate(5000, {0.6, 50.0}, Categorical::degenerate(1), rng);
  auto counts = flat_counts(log);
  std::uint64_t slots = 0;
  for (auto c : counts) slots += c;
  REQUIRE(slots == 10000);
  auto est = hollywood_fit(counts, tp, ap, 1000, 500, rng);
  CHECK(std::abs(est.discount - 0.6) < 0.05);
}

TEST_CASE("hollywood-fitted local priors") {
  Rng rng(9);
  auto sim = simulate(100, base_params(), rng);
  auto priors = default_priors(PriorPreset::HollywoodFitted);
  apply_hollywood_priors(priors, sim.log, 100, 50, rng);
  CHECK(priors.local_theta_overrides.size() == sim.log.num_sender_ids());
  for (auto& [s, g] : priors.local_theta_overrides) {
    CHECK(g.scale == 100.0);
    CHECK(g.shape > 0.0);
  }
}

TEST_CASE("z posterior: single sender") {
  auto log = log_of({{{"a"}, {"r"}}});
  HvcmParams p = base_params();
  Rng rng(10);
  auto st = SeatingState::sequential(log, {sender_id(0)}, p, rng);
  auto post = sample_z_posterior(st, 0, p, rng, 10);
  CHECK(post.chosen == sender_id(0));
  CHECK(post.probabilities == std::vector<double>{1.0});
}

TEST_CASE("z posterior: symmetric candidates") {
  // Once interaction 2 is removed, a and b have identical statistics.
  auto log = log_of({{{"a"}, {"x"}}, {{"b"}, {"x"}}, {{"a", "b"}, {"y", "x"}}});
  HvcmParams p = base_params();
  Rng rng(11);
  std::vector<SenderId> z{sender_id(0), sender_id(1), sender_id(0)};
  const auto base = SeatingState::sequential(log, z, p, rng);
  const int repeats = 1000;
  int chose_a = 0;
  double mean_pa = 0;
  for (int t = 0; t < repeats; ++t) {
    auto st = base;
    auto post = sample_z_posterior(st, 2, p, rng, 25);
    chose_a += post.chosen == sender_id(0);
    mean_pa += post.probabilities[0] / repeats;
  }
  const double se = std::sqrt(0.25 / repeats);
  CHECK(std::abs(chose_a / double(repeats) - 0.5) < 4 * se);
  CHECK(std::abs(mean_pa - 0.5) < 0.02);
}

TEST_CASE("z posterior matches exact enumeration") {
  auto log = log_of({{{"a"}, {"x", "y"}},
                     {{"a"}, {"x"}},
                     {{"b"}, {"y", "z"}},
                     {{"b"}, {"z"}},
                     {{"c"}, {"x"}},
                     {{"a", "b"}, {"x", "z"}}});
  HvcmParams p = base_params();
  p.local[sender_id(0)] = {0.6, 0.8};
  p.local[sender_id(1)] = {0.2, 3.0};
  p.receiver_size[sender_id(0)] = Categorical{{0.5, 0.3, 0.2}};
  Rng rng(12);
  std::vector<SenderId> z{sender_id(0), sender_id(0), sender_id(1), sender_id(1), sender_id(2),
                          sender_id(0)};
  auto st = SeatingState::sequential(log, z, p, rng);
  const std::size_t i = 5;

  auto removed = st;
  removed.remove_interaction(i);
  ZHistory hz = removed.z_history();
  hz.remove(removed.attribution(i));
  std::vector<SenderId> cand{sender_id(0), sender_id(1)};
  auto prior = z_weights(hz, cand, p.z);
  std::vector<double> exact(2);
  double norm = 0;
  for (int c = 0; c < 2; ++c) {
    exact[c] = prior[c] * p.receiver_size_for(cand[c]).prob(2) *
               exact_seat_paths(removed, i, cand[c], p);
    norm += exact[c];
  }
  for (auto& e : exact) e /= norm;

  auto post = sample_z_posterior(st, i, p, rng, 10000);
  REQUIRE(post.candidates == cand);
  CHECK(std::abs(post.probabilities[0] - exact[0]) < 0.02);
  CHECK(std::abs(post.probabilities[1] - exact[1]) < 0.02);
  st.audit();
  CHECK(st.attribution(i) == post.chosen);
}

TEST_CASE("count helpers") {
  auto log = log_of({{{"a", "b"}, {"x", "x"}}, {{"a"}, {"y"}}});
  CHECK(sender_counts(log) == std::vector<std::uint64_t>{2, 1});
  CHECK(local_receiver_counts(log, sender_id(0)) == std::vector<std::uint64_t>{2, 1});
  CHECK(local_receiver_counts(log, sender_id(1)) == std::vector<std::uint64_t>{2, 0});
}
