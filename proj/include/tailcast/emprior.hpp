#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tailcast/hyperprior.hpp"
#include "tailcast/ingest.hpp"
#include "tailcast/sampler.hpp"

namespace tailcast {

inline constexpr double kMinPriorVariance = 1e-4;

/// ceil(0.75 * m): the number of events the robust variance is taken over.
std::size_t robust_subset_size(std::size_t m);

/// Smallest sample variance (divisor k - 1) over all k-element subsets. The
/// optimal subset is contiguous in sorted order, so a sliding window suffices.
double min_subset_variance(std::span<const double> values, std::size_t k);

/// Empirical prior from per-event posterior means E[N_k]: median and robust
/// variance of their logarithms.
HyperPrior robust_hyperprior(std::span<const double> expected_populations,
                             std::span<const std::string> event_ids = {});

/// Same prior from log E[N_k] directly, for estimates beyond the range of a double.
HyperPrior robust_hyperprior_from_logs(std::span<const double> log_expected_populations,
                                       std::span<const std::string> event_ids = {});

struct FitInput {
  PerformanceList list;
  double t_m = 1.0;
};

struct EventFits {
  std::map<std::string, FitResult> fits;
  std::map<std::string, std::string> failures;
};

/// Fits every event independently under one prior. Each event's chains are
/// seeded from event_seed(config.seed, event_id).
EventFits fit_all(std::span<const FitInput> events, const HyperPrior& prior, const SamplerConfig& config);

struct TwoPassOptions {
  /// When false the second pass reuses the weak prior (prior plumbing check).
  bool empirical_second_pass = true;
};

struct TwoPassResult {
  HyperPrior prior;
  EventFits first_pass;
  EventFits second_pass;
};

TwoPassResult two_pass_fit(std::span<const FitInput> events, const SamplerConfig& config,
                           const TwoPassOptions& options = {});

}  // namespace tailcast
