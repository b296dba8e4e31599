#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tailcast/distcore.hpp"
#include "tailcast/hyperprior.hpp"
#include "tailcast/ingest.hpp"

namespace tailcast {

using Rng = std::mt19937_64;
using Theta = Eigen::Vector2d;
using LogTarget = std::function<double(const Theta&)>;

struct SamplerConfig {
  int burn_in_steps = 1000;
  double accept_lo = 0.2;
  double accept_hi = 0.4;
  int batches = 1000;
  int batch_len = 50;
  int chains = 10;
  double step_scale = 0.01;
  /// Proposal scale of the second coordinate relative to the first.
  double scale_ratio = 30.0;
  int max_retunes = 25;
  std::uint64_t seed = 20120101;
  std::size_t pooled_draws = 1000;

  void validate() const;
};

struct PosteriorDraw {
  double mu = 0.0;
  double log_n = 0.0;
  double sigma = 0.0;

  double population() const { return std::exp(log_n); }
  bool operator==(const PosteriorDraw&) const = default;
};

struct PosteriorChain {
  int chain_id = 0;
  std::vector<PosteriorDraw> draws;
  double accept_rate = 0.0;
  double step_scale = 0.0;
};

struct TunedState {
  double step_scale = 0.0;
  Theta state = Theta::Zero();
  double log_target = 0.0;
  double accept_rate = 0.0;
  int retunes = 0;
};

struct FitMetadata {
  EventSpec event;
  double t_m = 1.0;
  std::size_t n_k = 0;
  double w_k = 0.0;
  double c_k = 0.0;
  double best = 0.0;  // best transformed mark on the list
  HyperPrior prior;
  SamplerConfig config;
  std::vector<int> failed_chains;
};

struct FitResult {
  std::string event_id;
  std::vector<PosteriorChain> chains;
  std::vector<PosteriorDraw> pooled;
  double mpsrf = 0.0;
  bool converged = false;
  FitMetadata meta;

  /// Posterior mean of N on the natural scale.
  double expected_population() const;
  /// log of expected_population(), finite even when the mean overflows.
  double log_expected_population() const;
};

/// Burn-in with step-size retuning until the acceptance rate lands in [accept_lo, accept_hi].
TunedState tune_burn_in(const LogTarget& target, const SamplerConfig& config, const Theta& init, Rng& rng);

/// Batched random-walk Metropolis; keeps the last state of every batch.
/// `derive_sigma` fills PosteriorDraw::sigma (NaN when absent).
PosteriorChain run_chain(const LogTarget& target, const SamplerConfig& config, const TunedState& tuned, Rng& rng,
                         int chain_id = 0, const std::function<double(const Theta&)>& derive_sigma = {});

/// Multivariate potential scale reduction factor (square-root scale); +inf when
/// the within-chain covariance is singular.
double gelman_rubin_mpsrf(std::span<const PosteriorChain> chains);
double gelman_rubin_mpsrf(std::span<const Eigen::MatrixX2d> chains);

/// Uniform stride subsample of `count` draws across all chains, in chain order.
std::vector<PosteriorDraw> pool_draws(std::span<const PosteriorChain> chains, std::size_t count);

/// Stable per-event seed derived from the run seed.
std::uint64_t event_seed(std::uint64_t run_seed, const std::string& event_id);

FitResult fit_event(const PerformanceList& data, const HyperPrior& prior, const SamplerConfig& config, double t_m);

}  // namespace tailcast
