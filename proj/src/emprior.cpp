#include "tailcast/emprior.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>

#include "tailcast/error.hpp"
#include "tailcast/parallel.hpp"

namespace tailcast {

std::size_t robust_subset_size(std::size_t m) { return (3 * m + 3) / 4; }

double min_subset_variance(std::span<const double> values, std::size_t k) {
  if (k < 2 || k > values.size()) throw DomainError("min_subset_variance: need 2 <= k <= m");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start + k <= sorted.size(); ++start) {
    const auto first = sorted.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = first + static_cast<std::ptrdiff_t>(k);
    const double mean = std::accumulate(first, last, 0.0) / static_cast<double>(k);
    double ss = 0.0;
    for (auto it = first; it != last; ++it) ss += (*it - mean) * (*it - mean);
    best = std::min(best, ss / static_cast<double>(k - 1));
  }
  return best;
}

HyperPrior robust_hyperprior(std::span<const double> expected_populations, std::span<const std::string> event_ids) {
  std::vector<double> logs(expected_populations.size());
  std::transform(expected_populations.begin(), expected_populations.end(), logs.begin(), [](double e) {
    return e > 0.0 && std::isfinite(e) ? std::log(e) : std::numeric_limits<double>::quiet_NaN();
  });
  return robust_hyperprior_from_logs(logs, event_ids);
}

HyperPrior robust_hyperprior_from_logs(std::span<const double> log_expected_populations,
                                       std::span<const std::string> event_ids) {
  std::vector<double> logs;
  HyperPrior prior;
  prior.provenance = PriorProvenance::Empirical;
  for (std::size_t i = 0; i < log_expected_populations.size(); ++i) {
    const double e = log_expected_populations[i];
    const std::string id = i < event_ids.size() ? event_ids[i] : std::to_string(i);
    if (!std::isfinite(e)) {
      std::clog << "warning: excluding non-finite population estimate for " << id << '\n';
      continue;
    }
    logs.push_back(e);
    prior.contributing_events.push_back(id);
  }
  if (logs.size() < 4)
    throw InsufficientEvents("empirical prior needs at least 4 events with finite estimates, got " +
                             std::to_string(logs.size()));

  std::vector<double> sorted = logs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  prior.mu_N = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  prior.sigma2_N = std::max(min_subset_variance(sorted, robust_subset_size(m)), kMinPriorVariance);
  return prior;
}

EventFits fit_all(std::span<const FitInput> events, const HyperPrior& prior, const SamplerConfig& config) {
  std::vector<std::optional<FitResult>> fits(events.size());
  std::vector<std::string> errors(events.size());
  parallel_for(events.size(), [&](std::size_t i) {
    SamplerConfig event_config = config;
    event_config.seed = event_seed(config.seed, events[i].list.event.event_id);
    try {
      fits[i] = fit_event(events[i].list, prior, event_config, events[i].t_m);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  EventFits out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& id = events[i].list.event.event_id;
    if (fits[i]) {
      out.fits.emplace(id, std::move(*fits[i]));
    } else {
      out.failures.emplace(id, errors[i]);
    }
  }
  return out;
}

TwoPassResult two_pass_fit(std::span<const FitInput> events, const SamplerConfig& config,
                           const TwoPassOptions& options) {
  if (events.size() < 4)
    throw InsufficientEvents("two-pass fitting needs at least 4 events, got " + std::to_string(events.size()));

  TwoPassResult result;
  result.first_pass = fit_all(events, HyperPrior::weakly_informative(), config);

  if (options.empirical_second_pass) {
    std::vector<double> estimates;
    std::vector<std::string> ids;
    for (const auto& [id, fit] : result.first_pass.fits) {
      estimates.push_back(fit.log_expected_population());
      ids.push_back(id);
    }
    result.prior = robust_hyperprior_from_logs(estimates, ids);
  } else {
    result.prior = HyperPrior::weakly_informative();
  }

  std::vector<FitInput> survivors;
  for (const auto& e : events)
    if (result.first_pass.fits.count(e.list.event.event_id)) survivors.push_back(e);
  result.second_pass = fit_all(survivors, result.prior, config);
  for (const auto& [id, why] : result.first_pass.failures) result.second_pass.failures.emplace(id, why);
  return result;
}

}  // namespace tailcast
