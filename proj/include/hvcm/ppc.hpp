#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hvcm/inference.hpp"
#include "hvcm/interaction.hpp"

namespace hvcm {

// Worker count for parallel stages: HVCM_THREADS if set and positive, else the
// hardware concurrency, never more than `jobs`.
std::size_t worker_count(std::size_t jobs);

// Trace iterations used for m replicates: evenly spaced over the post-burn-in part.
std::vector<std::size_t> thinned_iterations(const GibbsTrace& trace, std::size_t m);

// One conditional replicate per thinned posterior sample, keeping the observed
// sender multisets and receiver counts. Replicate i uses seed derive_seed(seed, i).
std::vector<InteractionLog> generate_replicates(const GibbsTrace& trace, const InteractionLog& log,
                                                std::size_t m, std::uint64_t seed);

// Empirical (1 - level) / 2 and 1 - (1 - level) / 2 quantiles with linear
// interpolation between order statistics.
std::pair<double, double> interval(std::span<const double> values, double level = 0.95);

struct StatInterval {
  std::string statistic;
  std::vector<double> values;  // one per replicate
  double lo = 0.0;
  double hi = 0.0;
  double actual = 0.0;
  bool covered = false;
};

struct LocalInterval {
  SenderId sender{};
  StatInterval stat;
};

struct CoverageRate {
  std::string statistic;
  std::size_t covered = 0;
  std::size_t eligible = 0;
};

struct PpcConfig {
  double level = 0.95;
  std::vector<std::size_t> degree_thresholds{1, 10, 100};
};

struct PpcReport {
  double level = 0.95;
  std::size_t replicates = 0;
  std::vector<StatInterval> global;
  std::vector<LocalInterval> local;
  std::vector<CoverageRate> rates;
};

// Global and per-sender statistics of the replicates against the observed log:
// unique receivers, receivers at each degree threshold, the node-sharing
// histogram and the L1/TV distance of each replicate's degree distribution to
// the observed one. Per-sender degree statistics count only senders whose
// observed local network has a receiver at that degree.
PpcReport coverage_report(std::span<const InteractionLog> replicates, const InteractionLog& log,
                          const PpcConfig& config = {});

}  // namespace hvcm
