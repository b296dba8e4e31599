#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "tailcast/emprior.hpp"
#include "tailcast/error.hpp"
#include "tailcast/synth.hpp"

using namespace tailcast;

namespace {

std::vector<double> exp_all(std::vector<double> logs) {
  for (auto& v : logs) v = std::exp(v);
  return logs;
}

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (v.size() - 1.0);
}

// Every k-subset by bitmask.
double brute_force_min_variance(const std::vector<double>& values, std::size_t k) {
  const std::size_t m = values.size();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<double> subset;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) subset.push_back(values[i]);
    best = std::min(best, sample_variance(subset));
  }
  return best;
}

std::vector<FitInput> synthetic_corpus(std::uint64_t seed, int events, double base, double fraction) {
  Rng rng(seed);
  std::vector<FitInput> inputs;
  for (int k = 0; k < events; ++k) {
    const double N = base * std::pow(10.0, k / 10.0);
    const auto data = simulate_tail(EventSpec::running("ev" + std::to_string(k)), std::log(11.28) + 0.01 * k, 0.03,
                                    static_cast<std::size_t>(N), static_cast<std::size_t>(N * fraction), 2003, 2007, rng);
    inputs.push_back({make_performance_list(data, DateWindow::all()), 5.0});
  }
  return inputs;
}

double true_population(double base, int k) { return static_cast<double>(static_cast<std::size_t>(base * std::pow(10.0, k / 10.0))); }

}  // namespace

TEST_CASE("subset size rounds up") {
  CHECK(robust_subset_size(4) == 3);
  CHECK(robust_subset_size(8) == 6);
  CHECK(robust_subset_size(10) == 8);
  CHECK(robust_subset_size(20) == 15);
  CHECK(robust_subset_size(5) == 4);
}

TEST_CASE("four log estimates") {
  const auto prior = robust_hyperprior(exp_all({1, 2, 3, 4}));
  CHECK(prior.mu_N == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(prior.sigma2_N == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prior.provenance == PriorProvenance::Empirical);
}

TEST_CASE("equal estimates hit the variance floor") {
  const auto prior = robust_hyperprior(exp_all({9, 9, 9, 9, 9}));
  CHECK(prior.mu_N == doctest::Approx(9.0));
  CHECK(prior.sigma2_N == kMinPriorVariance);
}

TEST_CASE("too few or non-finite estimates") {
  CHECK_THROWS_AS(robust_hyperprior(exp_all({1, 2, 3})), InsufficientEvents);
  const std::vector<double> with_bad{std::exp(1.0), std::exp(2.0), std::numeric_limits<double>::infinity(),
                                     std::exp(3.0), std::exp(4.0), std::nan("")};
  const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f"};
  const auto prior = robust_hyperprior(with_bad, ids);
  CHECK(prior.mu_N == doctest::Approx(2.5));
  CHECK(prior.contributing_events == std::vector<std::string>{"a", "b", "d", "e"});
  const std::vector<double> mostly_bad{1.0, 0.0, -5.0, std::nan(""), 2.0, 3.0};
  CHECK_THROWS_AS(robust_hyperprior(mostly_bad), InsufficientEvents);
}

TEST_CASE("log estimates beyond the range of a double still count") {
  const std::vector<double> logs{5.0, 6.0, 7.0, 800.0, 900.0};
  const auto prior = robust_hyperprior_from_logs(logs);
  CHECK(prior.mu_N == 7.0);
  CHECK(prior.contributing_events.size() == 5);
  const auto same = robust_hyperprior_from_logs(std::vector<double>{1, 2, 3, 4});
  const auto natural = robust_hyperprior(exp_all({1, 2, 3, 4}));
  CHECK(same.mu_N == doctest::Approx(natural.mu_N).epsilon(1e-15));
  CHECK(same.sigma2_N == doctest::Approx(natural.sigma2_N).epsilon(1e-14));
  CHECK_THROWS_AS(robust_hyperprior_from_logs(std::vector<double>{1, 2, std::nan(""), 4}), InsufficientEvents);
}

TEST_CASE("sliding window equals exhaustive enumeration") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(4, 12);
  std::lognormal_distribution<double> spread(0.0, 1.0);
  for (int instance = 0; instance < 1000; ++instance) {
    const std::size_t m = static_cast<std::size_t>(size(rng));
    std::normal_distribution<double> z(9.0, spread(rng));
    std::vector<double> values(m);
    for (auto& v : values) v = z(rng);
    if (instance % 7 == 0) values[1] = values[0];
    const std::size_t k = robust_subset_size(m);
    const double fast = min_subset_variance(values, k);
    const double slow = brute_force_min_variance(values, k);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
  }
}

TEST_CASE("a pole-vault sized outlier leaves the prior unchanged") {
  std::vector<double> logs;
  for (int i = 0; i < 15; ++i) logs.push_back(9.9 + 0.01 * (i - 7));
  for (double v : {7.0, 8.0, 11.0, 12.0}) logs.push_back(v);
  auto tame = logs;
  tame.push_back(13.0);
  auto wild = logs;
  wild.push_back(std::log(2.71e16));

  const auto a = robust_hyperprior(exp_all(tame));
  const auto b = robust_hyperprior(exp_all(wild));
  CHECK(a.mu_N == b.mu_N);
  CHECK(a.sigma2_N == b.sigma2_N);
  CHECK(a.mu_N == doctest::Approx(9.9).epsilon(1e-3));
  CHECK(sample_variance(wild) > 100.0 * a.sigma2_N);
}

TEST_CASE("prior is invariant under permutation and median-preserving moves") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z(10.0, 1.5);
  std::vector<double> logs(11);
  for (auto& v : logs) v = z(rng);
  const auto ref = robust_hyperprior(exp_all(logs));
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(logs.begin(), logs.end(), rng);
    const auto p = robust_hyperprior(exp_all(logs));
    CHECK(p.mu_N == ref.mu_N);
    CHECK(p.sigma2_N == doctest::Approx(ref.sigma2_N).epsilon(1e-14));
  }
  auto moved = logs;
  auto top = std::max_element(moved.begin(), moved.end());
  *top += 25.0;
  CHECK(robust_hyperprior(exp_all(moved)).mu_N == ref.mu_N);
}

TEST_CASE("two-pass fitting needs four events") {
  const auto inputs = synthetic_corpus(3, 1, 20000, 0.05);
  CHECK_THROWS_AS(two_pass_fit(inputs, SamplerConfig{}), InsufficientEvents);
}

TEST_CASE("weak prior in the second pass reproduces the first pass") {
  const auto inputs = synthetic_corpus(4, 4, 20000, 0.1);
  const auto result = two_pass_fit(inputs, SamplerConfig{}, TwoPassOptions{false});
  CHECK(result.prior.provenance == PriorProvenance::WeaklyInformative);
  REQUIRE(result.first_pass.fits.size() == 4);
  for (const auto& [id, first] : result.first_pass.fits) {
    const auto& second = result.second_pass.fits.at(id);
    CHECK(first.pooled == second.pooled);
    CHECK(first.mpsrf == second.mpsrf);
  }
}

TEST_CASE("ten comparable events recover their populations") {
  const double base = 100000.0;
  const auto inputs = synthetic_corpus(1, 10, base, 0.05);
  const auto result = two_pass_fit(inputs, SamplerConfig{});
  CHECK(result.prior.provenance == PriorProvenance::Empirical);
  CHECK(result.prior.contributing_events.size() == 10);
  int improved = 0;
  for (int k = 0; k < 10; ++k) {
    const std::string id = "ev" + std::to_string(k);
    const auto& first = result.first_pass.fits.at(id);
    const auto& second = result.second_pass.fits.at(id);
    CHECK(second.meta.prior.provenance == PriorProvenance::Empirical);
    const double ratio = second.expected_population() / true_population(base, k);
    CHECK(ratio < 10.0);
    CHECK(ratio > 0.1);
    improved += second.mpsrf <= first.mpsrf ? 1 : 0;
  }
  CHECK(improved >= 7);
}

TEST_CASE("an unidentified population shrinks toward the others") {
  auto inputs = synthetic_corpus(2, 9, 100000, 0.1);
  // Exponential excesses below the worst mark: a tail shape the normal model
  // can only match with an enormous population.
  Rng rng(5);
  std::exponential_distribution<double> excess(1.0 / 0.004);
  EventData flat{EventSpec::running("flat"), {}};
  for (int i = 0; i < 400; ++i)
    flat.marks.push_back({std::exp(2.45 - excess(rng)), DateWindow::years(2003, 2004).start, {}});
  inputs.push_back({make_performance_list(flat, DateWindow::all()), 5.0});

  const auto result = two_pass_fit(inputs, SamplerConfig{});
  const double before = result.first_pass.fits.at("flat").expected_population();
  const double after = result.second_pass.fits.at("flat").expected_population();
  CHECK(before > 1e16);
  CHECK(after * 10.0 <= before);
  for (int k = 0; k < 9; ++k) {
    const std::string id = "ev" + std::to_string(k);
    const double r = result.second_pass.fits.at(id).expected_population() /
                     result.first_pass.fits.at(id).expected_population();
    CHECK(r < 2.0);
    CHECK(r > 0.5);
  }
}
