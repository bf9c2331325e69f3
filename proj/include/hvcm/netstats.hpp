#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hvcm/inference.hpp"
#include "hvcm/interaction.hpp"

namespace hvcm {

// Counts of one (sub-)network. arity[k] = M_k, degree[k] = N_k; index 0 unused.
struct NetStats {
  std::uint64_t v = 0;  // distinct receivers
  std::uint64_t e = 0;  // interactions
  std::vector<std::uint64_t> arity{0};
  std::vector<std::uint64_t> degree{0};

  std::uint64_t slots() const;
  double mean_arity() const;  // m-bullet; 0 for an empty network
  // d_k = N_k / v, same indexing as `degree`.
  std::vector<double> degree_distribution() const;
  std::uint64_t receivers_with_degree(std::size_t k) const {
    return k < degree.size() ? degree[k] : 0;
  }

  bool operator==(const NetStats&) const = default;
};

NetStats compute_stats(const InteractionLog& log);
// Statistics of the interactions listing each sender (set semantics for
// multi-sender records), indexed by sender id.
std::vector<NetStats> local_stats(const InteractionLog& log);

struct GrowthPoint {
  std::size_t n = 0;
  std::uint64_t v = 0;
  std::uint64_t e = 0;
  double mean_arity = 0.0;
};

// Up to `count` distinct integers spaced geometrically over [lo, hi].
std::vector<std::size_t> geometric_checkpoints(std::size_t lo, std::size_t hi, std::size_t count);
// v, e and m-bullet after the first n interactions for each checkpoint n, globally
// or restricted to the interactions listing `sender`.
std::vector<GrowthPoint> growth_curve(const InteractionLog& log,
                                      std::span<const std::size_t> checkpoints,
                                      std::optional<SenderId> sender = std::nullopt);

// Least-squares slope of log v against log n.
double sparsity_slope(std::span<const GrowthPoint> points);
// e / v^{m-bullet}; a sparse sequence drives this to zero.
double sparsity_ratio(const GrowthPoint& point);

// Least-squares exponent gamma of d_k ~ C k^{-gamma} over k in [k_lo, k_hi],
// using the k with d_k > 0 (at least five required).
double powerlaw_slope(std::span<const double> d, std::size_t k_lo, std::size_t k_hi);
// Asymptotic degree law alpha k^{-(1 + alpha)} / Gamma(1 - alpha).
double yule_reference(double alpha, double k);

// hist[c] = number of receivers that appear in the interactions of exactly c
// distinct senders; index 0 unused.
std::vector<std::uint64_t> node_sharing_histogram(const InteractionLog& log);

enum class DistanceMetric { L1, TV };
// Distance between two normalised distributions over k, missing entries as zero.
double degree_distribution_distance(std::span<const double> d1, std::span<const double> d2,
                                    DistanceMetric metric);

// Mean over interactions listing both senders of the base-2 entropy of the
// posterior-mean attribution restricted to {s1, s2}.
double subject_overlap(const GibbsTrace& trace, const InteractionLog& log, SenderId s1,
                       SenderId s2);

struct OverlapEntry {
  SenderId s1{};
  SenderId s2{};
  double score = 0.0;
  std::size_t interactions = 0;
};
// Scores of every sender pair that shares at least one interaction (s1 < s2).
std::vector<OverlapEntry> overlap_matrix(const GibbsTrace& trace, const InteractionLog& log);

}  // namespace hvcm
