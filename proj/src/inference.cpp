#include "hvcm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hvcm/error.hpp"

namespace hvcm {

namespace {

constexpr double kEdge = 1e-12;

double clamp_unit(double v) { return std::clamp(v, kEdge, 1.0 - kEdge); }

double clamp_positive(double v) {
  return std::max(v, std::numeric_limits<double>::min());
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(std::string("priors: ") + what + " must be finite and positive");
  }
}

// log x for x ~ Beta(a, b) without underflow.
double log_beta_variate(double a, double b, Rng& rng) {
  const double la = rng.log_gamma_variate(a);
  const double lb = rng.log_gamma_variate(b);
  const double hi = std::max(la, lb);
  return la - (hi + std::log(std::exp(la - hi) + std::exp(lb - hi)));
}

}  // namespace

const GammaPrior& GibbsPriors::local_theta_for(SenderId s) const {
  auto it = local_theta_overrides.find(s);
  return it == local_theta_overrides.end() ? local_theta : it->second;
}

void GibbsPriors::validate() const {
  check_positive(theta.shape, "theta shape");
  check_positive(theta.scale, "theta scale");
  check_positive(alpha.a, "alpha a");
  check_positive(alpha.b, "alpha b");
  check_positive(local_theta.shape, "local theta shape");
  check_positive(local_theta.scale, "local theta scale");
  for (const auto& [s, g] : local_theta_overrides) {
    check_positive(g.shape, "local theta shape");
    check_positive(g.scale, "local theta scale");
  }
  if (local_alpha.kind == LocalAlphaPrior::Kind::Tied) {
    check_positive(local_alpha.phi, "phi");
  } else {
    check_positive(local_alpha.fixed.a, "local alpha a");
    check_positive(local_alpha.fixed.b, "local alpha b");
  }
  check_positive(sender_theta.shape, "sender theta shape");
  check_positive(sender_theta.scale, "sender theta scale");
  check_positive(sender_alpha.a, "sender alpha a");
  check_positive(sender_alpha.b, "sender alpha b");
}

GibbsPriors default_priors(PriorPreset preset) {
  GibbsPriors p;
  switch (preset) {
    case PriorPreset::Conjugate:
      break;
    case PriorPreset::Enron:
      p.theta = {2.0, 1000.0};
      p.alpha = {1.0, 1.0};
      p.local_theta = {1.0, 20.0};
      p.local_alpha.kind = LocalAlphaPrior::Kind::Fixed;
      p.local_alpha.fixed = {1.0, 0.9};
      break;
    case PriorPreset::HollywoodFitted:
      p.hollywood_local_theta = true;
      break;
  }
  return p;
}

GammaPrior hollywood_theta_prior(double theta_hat) {
  check_positive(theta_hat, "fitted theta");
  return {theta_hat / 100.0, 100.0};
}

AuxiliaryDraws draw_auxiliary(std::span<const std::uint64_t> counts, const PitmanYor& py,
                              Rng& rng) {
  AuxiliaryDraws aux;
  std::uint64_t total = 0;
  std::uint64_t items = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    total += c;
    ++items;
  }
  const double theta = py.concentration;
  const double alpha = py.discount;
  if (total > 1) aux.log_x = log_beta_variate(theta + 1.0, static_cast<double>(total - 1), rng);
  for (std::uint64_t i = 1; i < items; ++i) {
    aux.y_ones += rng.bernoulli(theta / (theta + alpha * static_cast<double>(i))) ? 1 : 0;
  }
  aux.y_count = items > 0 ? items - 1 : 0;
  for (auto c : counts) {
    for (std::uint64_t j = 1; j < c; ++j) {
      const double jd = static_cast<double>(j);
      aux.z_zeros += rng.bernoulli((jd - 1.0) / (jd - alpha)) ? 0 : 1;
      ++aux.z_count;
    }
  }
  return aux;
}

double sample_concentration(const AuxiliaryDraws& aux, const GammaPrior& prior, Rng& rng) {
  const double shape = prior.shape + static_cast<double>(aux.y_ones);
  const double rate = 1.0 / prior.scale - aux.log_x;
  return clamp_positive(rng.gamma(shape, rate));
}

double sample_discount(const AuxiliaryDraws& aux, const BetaPrior& prior, Rng& rng) {
  return clamp_unit(rng.beta(prior.a + static_cast<double>(aux.y_count - aux.y_ones),
                             prior.b + static_cast<double>(aux.z_zeros)));
}

IterationSummary gibbs_iteration(SeatingState& state, HvcmParams& params,
                                 const GibbsPriors& priors, Rng& rng) {
  const auto& log = state.log();
  for (std::size_t n = 0; n < log.size(); ++n) {
    for (std::size_t j = 0; j < log[n].receivers.size(); ++j) state.reseat(n, j, params, rng);
  }

  IterationSummary summary;
  summary.global = draw_auxiliary(state.label_tables(), params.global, rng);
  params.global.concentration = sample_concentration(summary.global, priors.theta, rng);
  params.global.discount = sample_discount(summary.global, priors.alpha, rng);

  std::vector<std::uint64_t> degrees;
  const double alpha = params.global.discount;
  for (std::uint32_t i = 0; i < state.num_senders(); ++i) {
    const SenderId s = sender_id(i);
    PitmanYor local = params.local_for(s);
    degrees.clear();
    for (const auto& t : state.arena(s)) {
      if (t.degree > 0) degrees.push_back(t.degree);
    }
    const auto aux = draw_auxiliary(degrees, local, rng);
    local.concentration = sample_concentration(aux, priors.local_theta_for(s), rng);
    BetaPrior beta = priors.local_alpha.fixed;
    if (priors.local_alpha.kind == LocalAlphaPrior::Kind::Tied) {
      beta = {priors.local_alpha.phi * alpha, priors.local_alpha.phi * (1.0 - alpha)};
    }
    local.discount = sample_discount(aux, beta, rng);
    params.local[s] = local;
    ++summary.senders_updated;
  }
  return summary;
}

ZPosterior sample_z_posterior(SeatingState& state, std::size_t i, const HvcmParams& params,
                              Rng& rng, std::size_t n_mc) {
  if (n_mc == 0) throw Error("z posterior: need at least one Monte Carlo sample");
  const auto& rec = state.log()[i];
  ZPosterior out;
  out.candidates = rec.distinct_senders();
  if (out.candidates.size() == 1) {
    out.chosen = out.candidates.front();
    out.probabilities = {1.0};
    return out;
  }
  const std::size_t k2 = rec.receivers.size();
  state.remove_interaction(i);
  ZHistory hz = state.z_history();
  hz.remove(state.attribution(i));
  const auto prior = z_weights(hz, out.candidates, params.z);

  std::vector<double> log_post(out.candidates.size());
  std::vector<double> runs(n_mc);
  for (std::size_t c = 0; c < out.candidates.size(); ++c) {
    state.set_attribution(i, out.candidates[c]);
    for (std::size_t t = 0; t < n_mc; ++t) {
      double lp = 0.0;
      for (std::size_t j = 0; j < k2; ++j) lp += std::log(state.seat(i, j, params, rng));
      state.remove_interaction(i);
      runs[t] = lp;
    }
    const double hi = *std::max_element(runs.begin(), runs.end());
    double acc = 0.0;
    for (double lp : runs) acc += std::exp(lp - hi);
    log_post[c] = std::log(prior[c]) +
                  std::log(params.receiver_size_for(out.candidates[c]).prob(k2)) + hi +
                  std::log(acc / static_cast<double>(n_mc));
  }
  const double hi = *std::max_element(log_post.begin(), log_post.end());
  if (!std::isfinite(hi)) throw Error("z posterior: every candidate has zero probability");
  double norm = 0.0;
  out.probabilities.resize(log_post.size());
  for (std::size_t c = 0; c < log_post.size(); ++c) {
    out.probabilities[c] = std::exp(log_post[c] - hi);
    norm += out.probabilities[c];
  }
  for (auto& p : out.probabilities) p /= norm;
  out.chosen = out.candidates[rng.categorical(out.probabilities)];
  state.set_attribution(i, out.chosen);
  for (std::size_t j = 0; j < k2; ++j) state.seat(i, j, params, rng);
  return out;
}

void FitConfig::validate() const {
  if (iterations == 0) throw Error("fit: iterations must be positive");
  if (burn_in >= iterations) throw Error("fit: burn-in must be smaller than iterations");
  if (z_mc_samples == 0) throw Error("fit: z Monte Carlo samples must be positive");
  if (z_every == 0) throw Error("fit: z update period must be positive");
  validate_global_urn(initial_global);
  validate_local_urn(initial_local);
  if (sender_params) validate_population_urn(*sender_params, "sender urn");
  if (z_params) validate_population_urn(*z_params, "attribution urn");
}

HvcmParams GibbsTrace::params_at(std::size_t t) const {
  const auto& rec = records.at(t);
  HvcmParams p;
  p.sender = rec.sender;
  p.global = rec.global;
  p.z = z;
  p.sender_size = sender_size;
  p.default_receiver_size = receiver_size;
  const auto& row = local.at(t);
  for (std::uint32_t s = 0; s < row.size(); ++s) p.local[sender_id(s)] = row[s];
  if (!row.empty()) p.default_local = row.front();
  return p;
}

namespace {

std::size_t first_kept(const GibbsTrace& trace) {
  return trace.burn_in < trace.records.size() ? trace.burn_in : 0;
}

}  // namespace

PitmanYor GibbsTrace::mean_global() const {
  PitmanYor m{0.0, 0.0};
  const std::size_t from = first_kept(*this);
  const double n = static_cast<double>(records.size() - from);
  for (std::size_t t = from; t < records.size(); ++t) {
    m.discount += records[t].global.discount / n;
    m.concentration += records[t].global.concentration / n;
  }
  return m;
}

std::vector<PitmanYor> GibbsTrace::mean_local() const {
  if (local.empty()) return {};
  std::vector<PitmanYor> m(local.front().size(), PitmanYor{0.0, 0.0});
  const std::size_t from = first_kept(*this);
  const double n = static_cast<double>(local.size() - from);
  for (std::size_t t = from; t < local.size(); ++t) {
    for (std::size_t s = 0; s < m.size(); ++s) {
      m[s].discount += local[t][s].discount / n;
      m[s].concentration += local[t][s].concentration / n;
    }
  }
  return m;
}

std::vector<std::uint64_t> flat_counts(const InteractionLog& log) {
  if (!log.shared_population()) return sender_counts(log);
  std::vector<std::uint64_t> counts(log.num_sender_ids(), 0);
  for (const auto& rec : log.records()) {
    for (auto s : rec.senders) ++counts[index(s)];
    for (auto r : rec.receivers) ++counts[index(r)];
  }
  return counts;
}

std::vector<std::uint64_t> sender_counts(const InteractionLog& log) {
  std::vector<std::uint64_t> counts(log.num_sender_ids(), 0);
  for (const auto& rec : log.records()) {
    for (auto s : rec.senders) ++counts[index(s)];
  }
  return counts;
}

std::vector<std::uint64_t> local_receiver_counts(const InteractionLog& log, SenderId s) {
  std::vector<std::uint64_t> counts(log.num_receiver_ids(), 0);
  for (const auto& rec : log.records()) {
    if (!rec.lists_sender(s)) continue;
    for (auto r : rec.receivers) ++counts[index(r)];
  }
  return counts;
}

PitmanYor hollywood_fit(std::span<const std::uint64_t> counts, const GammaPrior& theta_prior,
                        const BetaPrior& alpha_prior, std::size_t iterations,
                        std::size_t burn_in, Rng& rng) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total <= 1) return {alpha_prior.mean(), theta_prior.mean()};
  if (iterations == 0 || burn_in >= iterations) {
    throw Error("hollywood fit: need 0 <= burn-in < iterations");
  }
  PitmanYor py{0.5, 1.0};
  PitmanYor mean{0.0, 0.0};
  const double kept = static_cast<double>(iterations - burn_in);
  for (std::size_t t = 0; t < iterations; ++t) {
    const auto aux = draw_auxiliary(counts, py, rng);
    py.concentration = sample_concentration(aux, theta_prior, rng);
    py.discount = sample_discount(aux, alpha_prior, rng);
    if (t >= burn_in) {
      mean.discount += py.discount / kept;
      mean.concentration += py.concentration / kept;
    }
  }
  return mean;
}

void apply_hollywood_priors(GibbsPriors& priors, const InteractionLog& log, std::size_t iterations,
                            std::size_t burn_in, Rng& rng) {
  for (std::uint32_t i = 0; i < log.num_sender_ids(); ++i) {
    const SenderId s = sender_id(i);
    const auto counts = local_receiver_counts(log, s);
    const auto fitted =
        hollywood_fit(counts, priors.local_theta, BetaPrior{1.0, 1.0}, iterations, burn_in, rng);
    priors.local_theta_overrides[s] = hollywood_theta_prior(fitted.concentration);
  }
}

namespace {

Categorical size_distribution(const InteractionLog& log, bool senders) {
  std::vector<std::uint64_t> counts;
  for (const auto& rec : log.records()) {
    const std::size_t k = senders ? rec.senders.size() : rec.receivers.size();
    if (counts.size() < k) counts.resize(k, 0);
    ++counts[k - 1];
  }
  return Categorical::empirical(counts);
}

}  // namespace

GibbsTrace fit(const InteractionLog& log, const GibbsPriors& priors_in, const FitConfig& config) {
  if (log.empty()) throw Error("fit: the interaction log is empty");
  config.validate();
  priors_in.validate();
  GibbsPriors priors = priors_in;

  Rng setup_rng(derive_seed(config.seed, 1));
  Rng rng(derive_seed(config.seed, 2));

  if (priors.hollywood_local_theta && priors.local_theta_overrides.empty()) {
    apply_hollywood_priors(priors, log, 200, 100, setup_rng);
  }

  HvcmParams params;
  const auto senders = sender_counts(log);
  params.sender = config.sender_params
                      ? *config.sender_params
                      : hollywood_fit(senders, priors.sender_theta, priors.sender_alpha, 200, 100,
                                      setup_rng);
  params.z = config.z_params ? *config.z_params : params.sender;
  params.global = config.initial_global;
  params.default_local = config.initial_local;
  for (std::uint32_t s = 0; s < log.num_sender_ids(); ++s) {
    params.local[sender_id(s)] = config.initial_local;
  }
  params.sender_size = size_distribution(log, true);
  params.default_receiver_size = size_distribution(log, false);

  GibbsTrace trace;
  trace.seed = config.seed;
  trace.burn_in = config.burn_in;
  trace.z = params.z;
  trace.sender_size = params.sender_size;
  trace.receiver_size = params.default_receiver_size;
  for (std::size_t n = 0; n < log.size(); ++n) {
    if (log[n].distinct_senders().size() > 1) {
      trace.multi_sender.push_back(n);
      trace.z_candidates.push_back(log[n].distinct_senders());
      trace.z_posterior_mean.emplace_back(trace.z_candidates.back().size(), 0.0);
    }
  }

  auto attribution = sample_attribution(log, params.z, rng);
  auto state = SeatingState::sequential(log, std::move(attribution), params, rng);

  std::size_t z_kept = 0;
  std::vector<std::vector<double>> z_all(trace.z_posterior_mean);
  std::size_t z_all_count = 0;
  trace.records.reserve(config.iterations);
  trace.local.reserve(config.iterations);
  for (std::size_t t = 0; t < config.iterations; ++t) {
    gibbs_iteration(state, params, priors, rng);
    if (config.sample_sender_params) {
      const auto aux = draw_auxiliary(senders, params.sender, rng);
      params.sender.concentration = sample_concentration(aux, priors.sender_theta, rng);
      params.sender.discount = sample_discount(aux, priors.sender_alpha, rng);
    }
    if (!trace.multi_sender.empty() && t % config.z_every == 0) {
      std::vector<SenderId> draw;
      draw.reserve(trace.multi_sender.size());
      for (std::size_t k = 0; k < trace.multi_sender.size(); ++k) {
        const auto post =
            sample_z_posterior(state, trace.multi_sender[k], params, rng, config.z_mc_samples);
        draw.push_back(post.chosen);
        auto& target = t >= config.burn_in ? trace.z_posterior_mean[k] : z_all[k];
        for (std::size_t c = 0; c < post.probabilities.size(); ++c) {
          target[c] += post.probabilities[c];
        }
      }
      if (t >= config.burn_in) {
        ++z_kept;
      } else {
        ++z_all_count;
      }
      trace.z_samples.push_back(std::move(draw));
    }
    TraceRecord rec;
    rec.iteration = t;
    rec.global = params.global;
    rec.sender = params.sender;
    rec.log_likelihood = state.log_likelihood(params);
    rec.labels = state.distinct_labels();
    rec.tables = state.grand_total();
    trace.records.push_back(rec);
    std::vector<PitmanYor> row(log.num_sender_ids());
    for (std::uint32_t s = 0; s < row.size(); ++s) row[s] = params.local_for(sender_id(s));
    trace.local.push_back(std::move(row));
  }
  // Without post-burn-in attribution updates, fall back to every update made.
  for (std::size_t k = 0; k < trace.z_posterior_mean.size(); ++k) {
    auto& mean = trace.z_posterior_mean[k];
    if (z_kept == 0) {
      mean = z_all[k];
      for (auto& p : mean) p /= static_cast<double>(std::max<std::size_t>(z_all_count, 1));
    } else {
      for (auto& p : mean) p /= static_cast<double>(z_kept);
    }
  }
  trace.final_attribution = state.attribution();
  return trace;
}

}  // namespace hvcm
