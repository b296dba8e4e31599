#include "tailcast/sampler.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>

#include "tailcast/parallel.hpp"

namespace tailcast {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kSettleRounds = 5;

struct Walker {
  const LogTarget& target;
  Eigen::Vector2d scales;
  Theta state;
  double log_target;
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> uniform{0.0, 1.0};

  bool step(Rng& rng) {
    Theta proposal = state;
    proposal(0) += scales(0) * normal(rng);
    proposal(1) += scales(1) * normal(rng);
    const double lp = target(proposal);
    if (lp == kNegInf || std::isnan(lp)) {
      uniform(rng);  // keep the stream layout independent of the rejection path
      return false;
    }
    if (std::log(uniform(rng)) < lp - log_target) {
      state = proposal;
      log_target = lp;
      return true;
    }
    return false;
  }
};

Eigen::Vector2d proposal_scales(const SamplerConfig& config, double step_scale) {
  return {step_scale, step_scale * config.scale_ratio};
}

// Draw from Normal(mean, sd) restricted to [lo, hi] by inverting the cdf.
double truncated_normal_draw(double mean, double sd, double lo, double hi, Rng& rng) {
  const double a = std_normal_cdf((lo - mean) / sd);
  const double b = std_normal_cdf((hi - mean) / sd);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p = a + (b - a) * u(rng);
  if (!(p > 0.0 && p < 1.0) || b - a < 1e-300) return std::clamp(mean, lo, hi);
  return std::clamp(mean + sd * std_normal_quantile(p), lo, hi);
}

// Random start: log N from the prior (restricted to a plausible window), mu at
// the best profile value for that N, then jittered.
std::optional<Theta> initial_state(const TailPosterior<double>& posterior, Rng& rng) {
  const auto& data = posterior.data();
  const auto& prior = posterior.prior();
  const double log_n = std::log(static_cast<double>(data.n));
  const double lo = log_n + std::log(4.0);
  const double hi = log_n + 12.0;
  const double spread = std::max(data.worst - (data.mean - std::sqrt(data.scatter / data.n) * 3.0), 1e-6);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 0; attempt < 20; ++attempt) {
    const double ln_n = truncated_normal_draw(prior.mu_N, std::sqrt(prior.sigma2_N), lo, hi, rng);
    double best_mu = std::numeric_limits<double>::quiet_NaN();
    double best_lp = kNegInf;
    for (int i = 0; i <= 240; ++i) {
      const double t = std::pow(10.0, -2.0 + 4.0 * i / 240.0);
      const Theta theta(data.worst + spread * t, ln_n);
      const double lp = posterior(theta);
      if (lp > best_lp) {
        best_lp = lp;
        best_mu = theta(0);
      }
    }
    if (best_lp == kNegInf) continue;
    const Theta start(data.worst + (best_mu - data.worst) * std::exp(0.05 * normal(rng)), ln_n);
    if (std::isfinite(posterior(start))) return start;
  }
  return std::nullopt;
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(0.0 < accept_lo && accept_lo < accept_hi && accept_hi < 1.0))
    throw DomainError("sampler acceptance band must satisfy 0 < lo < hi < 1");
  if (burn_in_steps <= 0 || batches <= 0 || batch_len <= 0 || chains <= 0 || max_retunes < 0 || pooled_draws == 0)
    throw DomainError("sampler counts must be positive");
  if (!(step_scale >= 0.0) || !(scale_ratio > 0.0)) throw DomainError("sampler scales must be positive");
}

double FitResult::expected_population() const {
  if (pooled.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& d : pooled) sum += d.population();
  return sum / static_cast<double>(pooled.size());
}

double FitResult::log_expected_population() const {
  if (pooled.empty()) return std::numeric_limits<double>::quiet_NaN();
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& d : pooled) top = std::max(top, d.log_n);
  if (!std::isfinite(top)) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& d : pooled) sum += std::exp(d.log_n - top);
  return top + std::log(sum / static_cast<double>(pooled.size()));
}

TunedState tune_burn_in(const LogTarget& target, const SamplerConfig& config, const Theta& init, Rng& rng) {
  config.validate();
  const double lp0 = target(init);
  if (!std::isfinite(lp0)) throw DomainError("burn-in start has no finite log target");

  TunedState tuned;
  tuned.step_scale = config.step_scale;
  Walker walker{target, proposal_scales(config, tuned.step_scale), init, lp0};
  double factor = 2.0;
  int last_direction = 0;

  for (int retune = 0;; ++retune) {
    walker.scales = proposal_scales(config, tuned.step_scale);
    int accepted = 0;
    for (int s = 0; s < config.burn_in_steps; ++s) accepted += walker.step(rng) ? 1 : 0;
    const double rate = static_cast<double>(accepted) / config.burn_in_steps;
    tuned.accept_rate = rate;
    tuned.retunes = retune;
    if (rate >= config.accept_lo && rate <= config.accept_hi) break;
    if (retune == config.max_retunes)
      throw TuningFailed(rate, "burn-in acceptance " + std::to_string(rate) + " outside band after " +
                                   std::to_string(retune) + " retunes");
    const int direction = rate > config.accept_hi ? 1 : -1;
    // Shrink the multiplier when the search overshoots the band.
    if (last_direction != 0 && direction != last_direction) factor = std::max(std::sqrt(factor), 1.05);
    last_direction = direction;
    tuned.step_scale = direction > 0 ? tuned.step_scale * factor : tuned.step_scale / factor;
  }
  tuned.state = walker.state;
  tuned.log_target = walker.log_target;
  return tuned;
}

PosteriorChain run_chain(const LogTarget& target, const SamplerConfig& config, const TunedState& tuned, Rng& rng,
                         int chain_id, const std::function<double(const Theta&)>& derive_sigma) {
  config.validate();
  Walker walker{target, proposal_scales(config, tuned.step_scale), tuned.state, tuned.log_target};
  PosteriorChain chain;
  chain.chain_id = chain_id;
  chain.step_scale = tuned.step_scale;
  chain.draws.reserve(static_cast<std::size_t>(config.batches));

  long long accepted = 0;
  for (int b = 0; b < config.batches; ++b) {
    for (int s = 0; s < config.batch_len; ++s) accepted += walker.step(rng) ? 1 : 0;
    const double sigma = derive_sigma ? derive_sigma(walker.state) : std::numeric_limits<double>::quiet_NaN();
    chain.draws.push_back({walker.state(0), walker.state(1), sigma});
  }
  chain.accept_rate = static_cast<double>(accepted) / (static_cast<double>(config.batches) * config.batch_len);
  return chain;
}

double gelman_rubin_mpsrf(std::span<const Eigen::MatrixX2d> chains) {
  const auto m = static_cast<Eigen::Index>(chains.size());
  if (m < 2) throw DomainError("gelman_rubin_mpsrf needs at least two chains");
  const Eigen::Index n = chains.front().rows();
  if (n < 10) throw DomainError("gelman_rubin_mpsrf needs chains of length >= 10");
  for (const auto& c : chains)
    if (c.rows() != n) throw DomainError("gelman_rubin_mpsrf needs equal-length chains");

  Eigen::Matrix2d within = Eigen::Matrix2d::Zero();
  Eigen::MatrixX2d means(m, 2);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& c = chains[static_cast<std::size_t>(j)];
    const Eigen::RowVector2d mean = c.colwise().mean();
    means.row(j) = mean;
    const Eigen::MatrixX2d centered = c.rowwise() - mean;
    within += centered.transpose() * centered / static_cast<double>(n - 1);
  }
  within /= static_cast<double>(m);
  const Eigen::MatrixX2d centered_means = means.rowwise() - means.colwise().mean();
  const Eigen::Matrix2d between_over_n = centered_means.transpose() * centered_means / static_cast<double>(m - 1);

  const double scale = within.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale) || std::abs(within.determinant()) <= 1e-12 * scale * scale)
    return std::numeric_limits<double>::infinity();

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> solver(between_over_n, within);
  if (solver.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double lambda = std::max(solver.eigenvalues().maxCoeff(), 0.0);
  const double nd = static_cast<double>(n);
  return std::sqrt((nd - 1.0) / nd + (1.0 + 1.0 / static_cast<double>(m)) * lambda);
}

double gelman_rubin_mpsrf(std::span<const PosteriorChain> chains) {
  std::vector<Eigen::MatrixX2d> mats;
  mats.reserve(chains.size());
  for (const auto& c : chains) {
    Eigen::MatrixX2d mat(static_cast<Eigen::Index>(c.draws.size()), 2);
    for (std::size_t i = 0; i < c.draws.size(); ++i) {
      mat(static_cast<Eigen::Index>(i), 0) = c.draws[i].mu;
      mat(static_cast<Eigen::Index>(i), 1) = c.draws[i].log_n;
    }
    mats.push_back(std::move(mat));
  }
  return gelman_rubin_mpsrf(std::span<const Eigen::MatrixX2d>(mats));
}

std::vector<PosteriorDraw> pool_draws(std::span<const PosteriorChain> chains, std::size_t count) {
  std::vector<const PosteriorDraw*> all;
  for (const auto& c : chains)
    for (const auto& d : c.draws) all.push_back(&d);
  std::vector<PosteriorDraw> pooled;
  if (all.empty()) return pooled;
  pooled.reserve(count);
  for (std::size_t i = 0; i < count; ++i) pooled.push_back(*all[i * all.size() / count]);
  return pooled;
}

std::uint64_t event_seed(std::uint64_t run_seed, const std::string& event_id) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : event_id) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return run_seed ^ h;
}

FitResult fit_event(const PerformanceList& data, const HyperPrior& prior, const SamplerConfig& config, double t_m) {
  config.validate();
  if (data.marks.empty()) throw EmptyListError("fit_event on an empty list");

  const TailPosterior<double> posterior(TailSummary::from(data), prior);
  const LogTarget target = [&posterior](const Theta& t) { return posterior(t); };
  const auto derive_sigma = [&posterior](const Theta& t) {
    const auto s = posterior.sigma_at(t);
    return s ? *s : std::numeric_limits<double>::quiet_NaN();
  };

  const auto chains = static_cast<std::size_t>(config.chains);
  std::vector<std::optional<PosteriorChain>> results(chains);
  parallel_for(chains, [&](std::size_t i) {
    Rng rng(config.seed ^ static_cast<std::uint64_t>(i));
    const auto init = initial_state(posterior, rng);
    if (!init) return;
    try {
      TunedState tuned = tune_burn_in(target, config, *init, rng);
      // A scale accepted while the chain was still travelling from its start
      // can be far off near the mode; re-tune from the end state until a
      // burn-in needs no change.
      for (int round = 0; round < kSettleRounds; ++round) {
        SamplerConfig again = config;
        again.step_scale = tuned.step_scale;
        const TunedState next = tune_burn_in(target, again, tuned.state, rng);
        const bool settled = next.retunes == 0;
        tuned = next;
        if (settled) break;
      }
      results[i] = run_chain(target, config, tuned, rng, static_cast<int>(i), derive_sigma);
    } catch (const TuningFailed&) {
    }
  });

  FitResult fit;
  fit.event_id = data.event.event_id;
  fit.meta = {data.event, t_m, data.n_k, data.worst(), data.c_k, data.best(), prior, config, {}};
  for (std::size_t i = 0; i < chains; ++i) {
    if (results[i]) {
      fit.chains.push_back(std::move(*results[i]));
    } else {
      fit.meta.failed_chains.push_back(static_cast<int>(i));
    }
  }
  if (fit.chains.empty()) throw FitFailed("every chain failed to tune for " + fit.event_id);
  if (fit.meta.failed_chains.size() * 2 >= chains && chains > 1)
    throw FitFailed(std::to_string(fit.meta.failed_chains.size()) + " of " + std::to_string(chains) +
                    " chains failed to tune for " + fit.event_id);
  if (!fit.meta.failed_chains.empty())
    std::clog << "warning: " << fit.event_id << ": " << fit.meta.failed_chains.size()
              << " chain(s) failed to tune and were excluded\n";

  fit.mpsrf = fit.chains.size() >= 2 && config.batches >= 10 ? gelman_rubin_mpsrf(fit.chains)
                                                             : std::numeric_limits<double>::infinity();
  fit.converged = fit.mpsrf < 1.1;
  fit.pooled = pool_draws(fit.chains, config.pooled_draws);
  return fit;
}

}  // namespace tailcast
