#include "hvcm/params.hpp"

#include <cmath>
#include <string>

#include "hvcm/error.hpp"

namespace hvcm {

std::optional<std::size_t> finite_population(const PitmanYor& py) {
  if (py.discount >= 0.0) return std::nullopt;
  const double k = -py.concentration / py.discount;
  const double rounded = std::round(k);
  if (rounded < 1.0 || std::abs(k - rounded) > 1e-9 * std::max(1.0, rounded)) return std::nullopt;
  return static_cast<std::size_t>(rounded);
}

void validate_population_urn(const PitmanYor& py, const char* what) {
  if (py.discount >= 0.0 && py.discount < 1.0 && py.concentration > 0.0) return;
  if (py.discount < 0.0 && finite_population(py)) return;
  throw Error(std::string(what) +
              ": need 0 <= alpha < 1 and theta > 0, or alpha < 0 and theta = -K alpha");
}

void validate_global_urn(const PitmanYor& py) {
  if (py.discount >= 0.0 && py.discount < 1.0 && py.concentration > -py.discount) return;
  if (py.discount < 0.0 && finite_population(py)) return;
  throw Error("global urn: need 0 <= alpha < 1 and theta > -alpha, or a finite population");
}

void validate_local_urn(const PitmanYor& py) {
  if (py.discount >= 0.0 && py.discount <= 1.0 && py.concentration > 0.0) return;
  throw Error("local urn: need 0 <= alpha_s <= 1 and theta_s > 0");
}

Categorical Categorical::degenerate(std::size_t k) {
  if (k == 0) throw Error("size distribution: sizes start at 1");
  Categorical c;
  c.probs.assign(k, 0.0);
  c.probs[k - 1] = 1.0;
  return c;
}

Categorical Categorical::uniform(std::size_t lo, std::size_t hi) {
  if (lo == 0 || hi < lo) throw Error("size distribution: need 1 <= lo <= hi");
  Categorical c;
  c.probs.assign(hi, 0.0);
  for (std::size_t k = lo; k <= hi; ++k) c.probs[k - 1] = 1.0 / static_cast<double>(hi - lo + 1);
  return c;
}

Categorical Categorical::empirical(const std::vector<std::uint64_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0.0) throw Error("size distribution: no observations");
  Categorical c;
  c.probs.clear();
  for (auto n : counts) c.probs.push_back(static_cast<double>(n) / total);
  while (!c.probs.empty() && c.probs.back() == 0.0) c.probs.pop_back();
  return c;
}

double Categorical::prob(std::size_t k) const {
  if (k == 0 || k > probs.size()) return 0.0;
  return probs[k - 1];
}

std::size_t Categorical::sample(Rng& rng) const { return rng.categorical(probs) + 1; }

void Categorical::validate() const {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw Error("size distribution: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("size distribution: probabilities must sum to 1");
}

const PitmanYor& HvcmParams::local_for(SenderId s) const {
  auto it = local.find(s);
  return it == local.end() ? default_local : it->second;
}

const Categorical& HvcmParams::receiver_size_for(SenderId s) const {
  auto it = receiver_size.find(s);
  return it == receiver_size.end() ? default_receiver_size : it->second;
}

void HvcmParams::validate() const {
  validate_population_urn(sender, "sender urn");
  validate_global_urn(global);
  validate_local_urn(default_local);
  for (const auto& [s, py] : local) validate_local_urn(py);
  validate_population_urn(z, "attribution urn");
  sender_size.validate();
  default_receiver_size.validate();
  for (const auto& [s, c] : receiver_size) c.validate();
}

}  // namespace hvcm
