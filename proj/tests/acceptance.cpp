// One PASS/FAIL line per acceptance criterion, with wall time.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "tailcast/backtest.hpp"
#include "tailcast/distcore.hpp"
#include "tailcast/emprior.hpp"
#include "tailcast/error.hpp"
#include "tailcast/sampler.hpp"
#include "tailcast/stats.hpp"
#include "tailcast/synth.hpp"

using namespace tailcast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Criterion 1 ------------------------------------------------------------

struct TableRow {
  const char* event;
  const char* marks[7];
};

constexpr double kColumns[7] = {800, 900, 1000, 1100, 1200, 1300, 1400};

constexpr TableRow kScoringTable[] = {
    {"mens100m", {"12.50", "11.85", "11.24", "10.66", "10.10", "9.58", "9.08"}},
    {"mens200m", {"25.12", "23.82", "22.58", "21.41", "20.30", "19.24", "18.24"}},
    {"mens400m", {"56.85", "53.89", "51.10", "48.44", "45.93", "43.54", "41.28"}},
    {"mens800m", {"2:11.64", "2:04.81", "1:58.33", "1:52.18", "1:46.36", "1:40.84", "1:35.60"}},
    {"mens1500m", {"4:30.89", "4:16.82", "4:03.49", "3:50.84", "3:38.86", "3:27.49", "3:16.72"}},
    {"mens3000m", {"9:35.72", "9:05.83", "8:37.48", "8:10.62", "7:45.14", "7:20.99", "6:58.09"}},
    {"mens5000m", {"16:26.21", "15:35", "14:46.45", "14:00.43", "13:16.79", "12:35.42", "11:56.20"}},
    {"mens10000m", {"33:54.31", "32:08.69", "30:28.54", "28:53.60", "27:23.59", "25:58.25", "24:37.34"}},
    {"mensHalfMarathon", {"1:15:34.51", "1:11:39.07", "1:07:55.85", "1:04:24.22", "1:01:03.58", "57:53.36", "54:53.01"}},
    {"mensMarathon", {"2:40:02.90", "2:31:44.29", "2:23:51.58", "2:16:23.40", "2:09:18.50", "2:02:35.66", "1:56:13.74"}},
    {"womens100m", {"13.80", "13.09", "12.41", "11.76", "11.15", "10.57", "10.02"}},
    {"womens200m", {"28.29", "26.82", "25.43", "24.11", "22.86", "21.67", "20.54"}},
    {"womens400m", {"1:03.38", "1:00.09", "56.97", "54.01", "51.21", "48.55", "46.03"}},
    {"womens800m", {"2:29.47", "2:21.71", "2:14.35", "2:07.37", "2:00.76", "1:54.49", "1:48.55"}},
    {"womens1500m", {"5:08.60", "4:52.57", "4:37.38", "4:22.98", "4:09.32", "3:56.38", "3:44.11"}},
    {"womens3000m", {"10:56.41", "10:22.33", "9:50.01", "9:19.38", "8:50.34", "8:22.80", "7:56.69"}},
    {"womens5000m", {"18:13.36", "17:16.59", "16:22.77", "15:31.74", "14:43.36", "13:57.49", "13:14.01"}},
    {"womens10000m", {"38:35.22", "36:35.01", "34:41.04", "32:52.98", "31:10.54", "29:33.42", "28:01.34"}},
    {"womensHalfMarathon",
     {"1:25:54.31", "1:21:26.69", "1:17:12.96", "1:13:12.40", "1:09:24.34", "1:05:48.11", "1:02:23.12"}},
    {"womensMarathon", {"3:01:13.87", "2:51:49.27", "2:42:53.98", "2:34:26.49", "2:26:25.36", "2:18:49.20", "2:11:36.73"}},
};

Outcome scoring_table() {
  double worst = 0.0;
  std::string where;
  for (const auto& row : kScoringTable) {
    const auto event = EventSpec::running(row.event);
    const double anchor = parse_time(row.marks[5]);
    for (int j = 0; j < 7; ++j) {
      const double off = std::abs(score(parse_time(row.marks[j]), event, anchor) - kColumns[j]);
      if (off > worst) {
        worst = off;
        where = fmt("%s@%.0f", row.event, kColumns[j]);
      }
    }
  }
  return {worst <= 2.0, fmt("20 events x 7 columns, max |score - header| = %.3f points (%s)", worst, where.c_str())};
}

// Criterion 2 ------------------------------------------------------------

Outcome tail_mass_identity() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(u(rng) * 5000);
    const double N = n * std::pow(10.0, 0.31 + 9.0 * u(rng));
    const double mu = -8.0 + 16.0 * u(rng);
    const double w = mu - std::pow(10.0, -3.0 + 4.0 * u(rng));
    const double sigma = sigma_from_population({mu, N, n, w, 5.0});
    const double back = 0.5 * std::erfc(-((w - mu) / sigma) / std::sqrt(2.0)) * N;
    worst = std::max(worst, std::abs(back - n) / n);
  }
  return {worst <= 1e-6, fmt("10000 draws, max relative error %.3e", worst)};
}

// Criterion 3 ------------------------------------------------------------

long double simpson(const std::function<long double(long double)>& f, long double a, long double b, long double fa,
                    long double fm, long double fb, long double whole, long double eps, int depth) {
  const long double m = 0.5L * (a + b);
  const long double flm = f(0.5L * (a + m)), frm = f(0.5L * (m + b));
  const long double left = (m - a) / 6.0L * (fa + 4.0L * flm + fm);
  const long double right = (b - m) / 6.0L * (fm + 4.0L * frm + fb);
  const long double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0L * eps) return left + right + delta / 15.0L;
  return simpson(f, a, m, fa, flm, fm, left, 0.5L * eps, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5L * eps, depth - 1);
}

long double integrate(const std::function<long double(long double)>& f, long double a, long double b, long double eps) {
  const long double fa = f(a), fb = f(b), fm = f(0.5L * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0L * (fa + 4.0L * fm + fb), eps, 40);
}

Outcome truncated_normalization() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double mu = -5.0 + 10.0 * u(rng);
    const double sigma = 0.005 + 3.0 * u(rng);
    const double c = mu + sigma * (-5.0 + 8.0 * u(rng));
    const NormalParams<double> p{mu, sigma * sigma};
    auto f = [&](long double x) { return static_cast<long double>(std::exp(truncnorm_logpdf<double>(x, p, c))); };
    const long double lo = std::min<long double>(c, mu) - 40.0L * sigma;
    worst = std::max(worst, std::abs(static_cast<double>(integrate(f, lo, c, 1e-13L)) - 1.0));
  }
  return {worst <= 1e-8, fmt("100 draws, max |integral - 1| = %.3e", worst)};
}

// Criterion 4 ------------------------------------------------------------

double ks_standard_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

Outcome sampler_calibration() {
  SamplerConfig config;
  config.scale_ratio = 1.0;
  config.step_scale = 0.1;
  const LogTarget target = [](const Theta& t) { return -0.5 * t.squaredNorm(); };
  Rng rng(4);
  const auto tuned = tune_burn_in(target, config, Theta(3.0, -3.0), rng);
  const auto chain = run_chain(target, config, tuned, rng);

  Eigen::MatrixX2d m(static_cast<Eigen::Index>(chain.draws.size()), 2);
  for (std::size_t i = 0; i < chain.draws.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) << chain.draws[i].mu, chain.draws[i].log_n;
  const Eigen::RowVector2d mean = m.colwise().mean();
  const Eigen::MatrixX2d centered = m.rowwise() - mean;
  const Eigen::Matrix2d cov = centered.transpose() * centered / (m.rows() - 1.0);
  const double mean_err = mean.cwiseAbs().maxCoeff();
  const double cov_err = (cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
  double ks = 0.0;
  for (int j = 0; j < 2; ++j) ks = std::max(ks, ks_standard_normal({m.col(j).data(), m.col(j).data() + m.rows()}));
  const bool pass = mean_err < 0.1 && cov_err < 0.15 && tuned.accept_rate >= 0.2 && tuned.accept_rate <= 0.4 && ks < 0.05;
  return {pass, fmt("mean err %.3f, cov err %.3f, terminal acceptance %.3f (retained %.3f), KS %.4f", mean_err, cov_err,
                    tuned.accept_rate, chain.accept_rate, ks)};
}

// Criterion 5 ------------------------------------------------------------

Outcome parameter_recovery() {
  constexpr int kEvents = 8;
  constexpr std::size_t kPopulation = 20000, kKeep = 500;
  Rng rng(5);
  std::vector<FitInput> inputs;
  std::vector<double> truth;
  for (int k = 0; k < kEvents; ++k) {
    const double mu = std::log(11.28) + 0.01 * k;
    truth.push_back(mu);
    const auto data = simulate_tail(EventSpec::running("ev" + std::to_string(k)), mu, 0.03, kPopulation, kKeep, 2003,
                                    2007, rng);
    inputs.push_back({make_performance_list(data, DateWindow::all()), 5.0});
  }
  TwoPassResult result;
  try {
    result = two_pass_fit(inputs, SamplerConfig{});
  } catch (const std::exception& e) {
    return {false, std::string("two-pass fit failed: ") + e.what()};
  }
  int covered = 0, sized = 0, converged = 0;
  std::string worst;
  double worst_ratio = 1.0;
  for (int k = 0; k < kEvents; ++k) {
    const auto& fit = result.second_pass.fits.at("ev" + std::to_string(k));
    double s = 0.0, s2 = 0.0;
    for (const auto& d : fit.pooled) {
      s += d.mu;
      s2 += d.mu * d.mu;
    }
    const double mean = s / fit.pooled.size();
    const double sd = std::sqrt(std::max(0.0, s2 / fit.pooled.size() - mean * mean));
    covered += std::abs(mean - truth[k]) <= 3.0 * sd ? 1 : 0;
    const double ratio = fit.expected_population() / kPopulation;
    sized += ratio <= 10.0 && ratio >= 0.1 ? 1 : 0;
    converged += fit.mpsrf < 1.1 ? 1 : 0;
    if (!(std::abs(std::log(ratio)) <= std::abs(std::log(worst_ratio)))) {
      worst_ratio = ratio;
      worst = "ev" + std::to_string(k);
    }
  }
  const bool pass = covered == kEvents && sized == kEvents && converged >= 7;
  return {pass, fmt("mu covered %d/8, E[N] within x10 %d/8 (worst %s at %.3g x N*), mpsrf<1.1 %d/8, prior mu_N %.3g",
                    covered, sized, worst.c_str(), worst_ratio, converged, result.prior.mu_N)};
}

// Criterion 6 ------------------------------------------------------------

Outcome order_statistic_oracle() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  std::string detail;
  for (std::size_t m : {10u, 100u, 1000u}) {
    constexpr std::size_t kReps = 1000000;
    double sum = 0.0;
    for (std::size_t r = 0; r < kReps; ++r) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) best = std::min(best, z(rng));
      sum += best;
    }
    const double oracle = sum / kReps;
    const double got = expected_best(ForecastContext::point_mass(0.0, 1.0, static_cast<double>(m), 1.0, 1.0)).mark.x;
    worst = std::max(worst, std::abs(got - oracle));
    detail += fmt("M=%zu %.4f vs %.4f; ", m, got, oracle);
  }
  return {worst <= 0.01, detail + fmt("max diff %.4f", worst)};
}

// Criterion 7 ------------------------------------------------------------

Outcome record_closed_form() {
  const auto ctx = ForecastContext::point_mass(0.0, 1.0, 1e6, 1.0, 1.0);
  const double p = record_probability(ctx, TransformedMark{std_normal_quantile(1e-6)});
  return {std::abs(p - 0.63212) <= 1e-4, fmt("p = %.6f", p)};
}

// Criterion 8 ------------------------------------------------------------

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (v.size() - 1.0);
}

Outcome prior_oracle() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(4, 12);
  std::lognormal_distribution<double> spread(0.0, 1.0);
  double worst = 0.0;
  for (int instance = 0; instance < 1000; ++instance) {
    const std::size_t m = static_cast<std::size_t>(size(rng));
    std::normal_distribution<double> z(9.0, spread(rng));
    std::vector<double> values(m);
    for (auto& v : values) v = z(rng);
    const std::size_t k = robust_subset_size(m);
    double slow = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
      std::vector<double> subset;
      for (std::size_t i = 0; i < m; ++i)
        if (mask & (1u << i)) subset.push_back(values[i]);
      slow = std::min(slow, sample_variance(subset));
    }
    worst = std::max(worst, std::abs(min_subset_variance(values, k) - slow) / slow);
  }

  std::vector<double> estimates;
  for (int i = 0; i < 15; ++i) estimates.push_back(std::exp(9.9 + 0.01 * (i - 7)));
  for (double v : {7.0, 8.0, 11.0, 12.0}) estimates.push_back(std::exp(v));
  auto tame = estimates;
  tame.push_back(std::exp(13.0));
  auto wild = estimates;
  wild.push_back(2.71e16);
  const auto a = robust_hyperprior(tame);
  const auto b = robust_hyperprior(wild);
  const bool robust = a.mu_N == b.mu_N && a.sigma2_N == b.sigma2_N && std::abs(b.mu_N - 9.9) < 0.05;
  return {worst <= 1e-10 && robust,
          fmt("1000 instances, max relative gap %.2e; with a 2.71e16 outlier mu_N %.4f vs %.4f, sigma2_N %.3g vs %.3g",
              worst, b.mu_N, a.mu_N, b.sigma2_N, a.sigma2_N)};
}

// Criterion 9 ------------------------------------------------------------

Outcome backtest_self_consistency() {
  int above = 0;
  std::string values;
  double lowest = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(900 + seed);
    std::vector<EventData> corpus;
    for (const auto& ev : mixed_corpus(20, 2011, rng)) corpus.push_back(simulate_event(ev, rng));
    BacktestSpec spec;
    spec.windows = {{2008, 2011}};
    spec.reference_ranks = {100};
    SamplerConfig config;
    config.seed = seed;
    double r = -2.0;
    try {
      const auto report = run_backtest(corpus, spec, config);
      const auto* cell = report.find(Statistic::Exceedances, 100, spec.windows[0]);
      if (cell && cell->correlation) r = *cell->correlation;
    } catch (const std::exception&) {
    }
    above += r > 0.6 ? 1 : 0;
    lowest = std::min(lowest, r);
    values += fmt("%.2f ", r);
  }
  return {above >= 18, fmt("%d/20 runs above 0.6 (lowest %.3f): %s", above, lowest, values.c_str())};
}

// Criterion 10 -----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / "tailcast_acceptance_e2e";
  fs::remove_all(root);
  const fs::path data = root / "data";
  fs::create_directories(data);
  Rng rng(10);
  for (const auto& ev : mixed_corpus(6, 2011, rng)) {
    std::ofstream out(data / (ev.event.event_id + ".tsv"));
    write_event_data(out, simulate_event(ev, rng));
  }

  const std::string bin = TAILCAST_BIN;
  for (const char* run : {"a", "b"}) {
    const std::string common = " --data " + data.string() + " --out " + (root / run).string() + " --seed 2024";
    for (const char* cmd : {"fit", "tables", "forecast"}) {
      const int status = std::system((bin + " " + cmd + common + " 2>/dev/null").c_str());
      if (status != 0) return {false, fmt("`%s` exited with status %d", cmd, status)};
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    if (!fs::exists(root / "b" / rel)) return {false, "missing in second run: " + rel.string()};
    if (slurp(entry.path()) != slurp(root / "b" / rel)) return {false, "differs between runs: " + rel.string()};
    ++files;
  }
  std::size_t files_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "b")) files_b += entry.is_regular_file() ? 1 : 0;
  return {files > 0 && files == files_b, fmt("%zu output files byte-identical across two runs", files)};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"scoring formula reproduces the published table", scoring_table},
      {"tail mass identity", tail_mass_identity},
      {"truncated density normalization", truncated_normalization},
      {"sampler calibration on a Gaussian target", sampler_calibration},
      {"synthetic parameter recovery", parameter_recovery},
      {"expected best vs Monte-Carlo minimum", order_statistic_oracle},
      {"record probability closed form", record_closed_form},
      {"robust prior vs exhaustive enumeration", prior_oracle},
      {"backtest self-consistency", backtest_self_consistency},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failed = 0;
  int index = 0;
  int ran = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    if (!only.empty() && std::find(only.begin(), only.end(), index) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += outcome.pass ? 0 : 1;
    std::printf("%s %2d %s [%.2fs] %s\n", outcome.pass ? "PASS" : "FAIL", index, name, seconds, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
