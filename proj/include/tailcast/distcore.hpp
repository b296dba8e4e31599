#pragma once

// Normal-distribution kernels and the truncated log-normal tail posterior.
//
// Every kernel is templated on the scalar type; the library instantiates them
// with double. Tail probabilities are carried in log space so that marks far
// beyond the observed list do not underflow.

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include "tailcast/error.hpp"
#include "tailcast/hyperprior.hpp"
#include "tailcast/ingest.hpp"

namespace tailcast {

template <class Scalar>
struct NormalParams {
  Scalar mu{0};
  Scalar sigma2{1};

  Scalar sigma() const { return std::sqrt(sigma2); }
};

/// (mu, N) view of a tail model, with the list facts that tie N to sigma.
struct PopulationParams {
  double mu = 0.0;
  double N = 0.0;
  std::size_t n_k = 0;
  double w_k = 0.0;
  double t_m = 1.0;

  double tail_fraction() const { return static_cast<double>(n_k) / N; }
};

namespace detail {

template <class Scalar>
constexpr Scalar inv_sqrt2() {
  return Scalar(0.70710678118654752440084436210484903928L);
}

template <class Scalar>
constexpr Scalar log_sqrt_2pi() {
  return Scalar(0.91893853320467274178032973640561763986L);
}

// log of the Mills ratio R(x) = (1 - Phi(x)) / phi(x) for x >= 36, where
// erfc itself would underflow, by a modified Lentz evaluation of the
// continued fraction
// R(x) = 1 / (x + 1 / (x + 2 / (x + 3 / (x + ...)))).
template <class Scalar>
Scalar log_mills_ratio(Scalar x) {
  const Scalar tiny = std::numeric_limits<Scalar>::min() * Scalar(1e10);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar f = x;
  Scalar c = x;
  Scalar d = 0;
  for (int k = 1; k < 500; ++k) {
    const Scalar a = Scalar(k);
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    const Scalar delta = c * d;
    f *= delta;
    if (std::abs(delta - Scalar(1)) < eps) break;
  }
  return -std::log(f);
}

}  // namespace detail

template <class Scalar>
Scalar std_normal_logpdf(Scalar z) {
  return -detail::log_sqrt_2pi<Scalar>() - Scalar(0.5) * z * z;
}

template <class Scalar>
Scalar std_normal_pdf(Scalar z) {
  return std::exp(std_normal_logpdf(z));
}

template <class Scalar>
Scalar std_normal_cdf(Scalar z) {
  return Scalar(0.5) * std::erfc(-z * detail::inv_sqrt2<Scalar>());
}

/// log Phi(z), finite for every finite z.
template <class Scalar>
Scalar log_std_normal_cdf(Scalar z) {
  if (z == -std::numeric_limits<Scalar>::infinity()) return z;
  if (z < Scalar(-36)) return std_normal_logpdf(z) + detail::log_mills_ratio(-z);
  if (z > Scalar(0)) return std::log1p(-Scalar(0.5) * std::erfc(z * detail::inv_sqrt2<Scalar>()));
  return std::log(std_normal_cdf(z));
}

/// Inverse of Phi: rational approximation followed by one Newton step on Phi.
template <class Scalar>
Scalar std_normal_quantile(Scalar p) {
  if (!(p > Scalar(0) && p < Scalar(1))) throw DomainError("std_normal_quantile: p must lie in (0, 1)");
  if (p > Scalar(0.5)) return -std_normal_quantile(Scalar(1) - p);

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};

  Scalar x;
  if (p < Scalar(0.02425)) {
    const Scalar q = std::sqrt(Scalar(-2) * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const Scalar q = p - Scalar(0.5);
    const Scalar r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  // Newton on log Phi keeps the step relative for tiny p.
  const Scalar g = log_std_normal_cdf(x) - std::log(p);
  const Scalar dg = std::exp(std_normal_logpdf(x) - log_std_normal_cdf(x));
  return x - g / dg;
}

/// Probability that a single performance is better than mark `a`.
template <class Scalar>
Scalar exceedance_prob(TransformedMark a, const NormalParams<Scalar>& params) {
  return std_normal_cdf((Scalar(a.x) - params.mu) / params.sigma());
}

template <class Scalar>
Scalar log_exceedance_prob(Scalar a, Scalar mu, Scalar sigma) {
  return log_std_normal_cdf((a - mu) / sigma);
}

/// Log-density of a normal truncated to (-inf, c]; -inf above c.
template <class Scalar>
Scalar truncnorm_logpdf(Scalar x, const NormalParams<Scalar>& params, Scalar c) {
  if (x > c) return -std::numeric_limits<Scalar>::infinity();
  const Scalar sigma = params.sigma();
  const Scalar z = (x - params.mu) / sigma;
  const Scalar log_mass = c == std::numeric_limits<Scalar>::infinity()
                              ? Scalar(0)
                              : log_std_normal_cdf((c - params.mu) / sigma);
  return std_normal_logpdf(z) - std::log(sigma) - log_mass;
}

/// sigma implied by Phi((w - mu) / sigma) = n / N, or nullopt outside the tail domain.
template <class Scalar>
std::optional<Scalar> try_sigma_from_population(Scalar mu, Scalar N, std::size_t n_k, Scalar w_k) {
  const Scalar q = Scalar(n_k) / N;
  if (!(q > Scalar(0) && q < Scalar(0.5)) || !(w_k < mu)) return std::nullopt;
  const Scalar sigma = (w_k - mu) / std_normal_quantile(q);
  if (!(sigma > Scalar(0)) || !std::isfinite(sigma)) return std::nullopt;
  return sigma;
}

inline double sigma_from_population(const PopulationParams& p) {
  const auto sigma = try_sigma_from_population(p.mu, p.N, p.n_k, p.w_k);
  if (!sigma) throw ReparamOutOfDomain("population parameters outside the lower-tail domain");
  return *sigma;
}

inline double population_from_sigma(double mu, double sigma, std::size_t n_k, double w_k) {
  return static_cast<double>(n_k) / std::exp(log_std_normal_cdf((w_k - mu) / sigma));
}

/// Sufficient statistics of a tail sample: the log-posterior only needs these.
struct TailSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double scatter = 0.0;  // sum of squared deviations from the mean
  double truncation = 0.0;
  double worst = 0.0;

  static TailSummary from(const PerformanceList& list);
  static TailSummary from(std::span<const double> xs, double truncation);
};

/// Un-normalized log posterior over theta = (mu, log N).
///
/// Flat prior on mu, Gaussian prior on log N, truncated-normal likelihood with
/// sigma tied to N through the tail-mass identity. Returns -inf wherever the
/// reparametrization has no solution.
template <class Scalar>
class TailPosterior {
public:
  using Theta = Eigen::Matrix<Scalar, 2, 1>;

  TailPosterior(TailSummary data, HyperPrior prior) : data_(data), prior_(std::move(prior)) {}

  Scalar log_likelihood(const Theta& theta) const {
    const auto sigma = sigma_at(theta);
    if (!sigma) return -std::numeric_limits<Scalar>::infinity();
    return log_likelihood(theta(0), *sigma);
  }

  Scalar log_likelihood(Scalar mu, Scalar sigma) const {
    const Scalar n = Scalar(data_.n);
    const Scalar dm = Scalar(data_.mean) - mu;
    const Scalar quad = (Scalar(data_.scatter) + n * dm * dm) / (sigma * sigma);
    const Scalar log_mass = log_std_normal_cdf((Scalar(data_.truncation) - mu) / sigma);
    return -n * (detail::log_sqrt_2pi<Scalar>() + std::log(sigma) + log_mass) - Scalar(0.5) * quad;
  }

  Scalar operator()(const Theta& theta) const {
    const auto sigma = sigma_at(theta);
    if (!sigma) return -std::numeric_limits<Scalar>::infinity();
    return log_likelihood(theta(0), *sigma) + Scalar(prior_.log_density(double(theta(1))));
  }

  std::optional<Scalar> sigma_at(const Theta& theta) const {
    if (!std::isfinite(theta(0)) || !std::isfinite(theta(1))) return std::nullopt;
    return try_sigma_from_population<Scalar>(theta(0), std::exp(theta(1)), data_.n, Scalar(data_.worst));
  }

  const TailSummary& data() const { return data_; }
  const HyperPrior& prior() const { return prior_; }

private:
  TailSummary data_;
  HyperPrior prior_;
};

inline double log_posterior(const Eigen::Vector2d& theta, const PerformanceList& data, const HyperPrior& prior) {
  return TailPosterior<double>(TailSummary::from(data), prior)(theta);
}

}  // namespace tailcast
