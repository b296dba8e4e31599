#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace tailcast {

enum class PriorProvenance { WeaklyInformative, Empirical };

/// Log-normal prior on population size: log N ~ Normal(mu_N, sigma2_N).
struct HyperPrior {
  double mu_N = 0.0;
  double sigma2_N = 1.0;
  PriorProvenance provenance = PriorProvenance::WeaklyInformative;
  std::vector<std::string> contributing_events;

  /// Median population 10,000 with log-scale variance e^20.
  static HyperPrior weakly_informative() {
    return {std::log(10000.0), std::exp(20.0), PriorProvenance::WeaklyInformative, {}};
  }

  /// Density of log N (the sampled coordinate), in log space.
  double log_density(double log_n) const {
    constexpr double log_two_pi = 1.8378770664093454836;
    const double d = log_n - mu_N;
    return -0.5 * (log_two_pi + std::log(sigma2_N)) - 0.5 * d * d / sigma2_N;
  }
};

inline const char* to_string(PriorProvenance p) {
  return p == PriorProvenance::Empirical ? "empirical" : "weak";
}

}  // namespace tailcast
