#include "tailcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "tailcast/distcore.hpp"
#include "tailcast/error.hpp"

namespace tailcast {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// P(best of horizon beats y) for one draw.
double draw_record_probability(const PosteriorDraw& d, double y, double horizon_factor) {
  const double exponent = horizon_factor * d.population();
  if (exponent <= 0.0) return 0.0;
  const double log_f = log_std_normal_cdf((y - d.mu) / d.sigma);
  if (log_f >= 0.0) return 1.0;
  // log(1 - F) without cancellation for F near 0 and near 1.
  const double log_survival = log_f < -0.6931471805599453 ? std::log1p(-std::exp(log_f))
                                                          : std::log(-std::expm1(log_f));
  return -std::expm1(exponent * log_survival);
}

double record_probability_at(const ForecastContext& ctx, double y) {
  if (ctx.draws.empty()) throw DomainError("forecast context without posterior draws");
  const double factor = ctx.t_f / ctx.t_m;
  double sum = 0.0;
  for (const auto& d : ctx.draws) sum += draw_record_probability(d, y, factor);
  return sum / static_cast<double>(ctx.draws.size());
}

double exceedances_at(const ForecastContext& ctx, double y) {
  if (ctx.draws.empty()) throw DomainError("forecast context without posterior draws");
  double sum = 0.0;
  for (const auto& d : ctx.draws) sum += std::exp(d.log_n + log_std_normal_cdf((y - d.mu) / d.sigma));
  return sum / (static_cast<double>(ctx.draws.size()) * ctx.t_m);
}

struct GridMean {
  double mean = 0.0;
  double mass = 0.0;
  bool unimodal = true;
};

GridMean integrate_on_grid(const ForecastContext& ctx, double lo, double hi, std::size_t intervals) {
  const double h = (hi - lo) / static_cast<double>(intervals);
  std::vector<double> cdf(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) cdf[i] = record_probability_at(ctx, lo + h * static_cast<double>(i));

  GridMean out;
  std::vector<double> density(intervals);
  double weighted = 0.0;
  for (std::size_t i = 0; i < intervals; ++i) {
    const double dp = cdf[i + 1] - cdf[i];
    density[i] = dp / h;
    weighted += (lo + h * (static_cast<double>(i) + 0.5)) * dp;
  }
  out.mass = cdf.back() - cdf.front();
  out.mean = weighted / out.mass;

  // A second rise after the density has fallen by more than 1% of its peak
  // is treated as a separate mode.
  const double peak = *std::max_element(density.begin(), density.end());
  const double tol = 1e-2 * peak;
  double running_min = density.front();
  bool falling = false;
  double last_peak = density.front();
  for (double v : density) {
    if (!falling) {
      last_peak = std::max(last_peak, v);
      if (v < last_peak - tol) {
        falling = true;
        running_min = v;
      }
    } else {
      running_min = std::min(running_min, v);
      if (v > running_min + tol) {
        out.unimodal = false;
        break;
      }
    }
  }
  return out;
}

}  // namespace

ForecastContext ForecastContext::from_fit(const FitResult& fit, double t_f) {
  ForecastContext ctx;
  ctx.draws = fit.pooled;
  ctx.t_m = fit.meta.t_m;
  ctx.t_f = t_f;
  ctx.n_k = fit.meta.n_k;
  ctx.w_k = fit.meta.w_k;
  ctx.best = fit.meta.best;
  return ctx;
}

ForecastContext ForecastContext::point_mass(double mu, double sigma, double population, double t_m, double t_f) {
  ForecastContext ctx;
  ctx.draws = {PosteriorDraw{mu, std::log(population), sigma}};
  ctx.t_m = t_m;
  ctx.t_f = t_f;
  ctx.w_k = mu;
  ctx.best = mu;
  return ctx;
}

double ForecastContext::mean_sigma() const {
  double sum = 0.0;
  for (const auto& d : draws) sum += d.sigma;
  return sum / static_cast<double>(draws.size());
}

ForecastContext ForecastContext::with_population_from(std::span<const PosteriorDraw> donor) const {
  if (donor.empty()) throw DomainError("population donor has no draws");
  ForecastContext out = *this;
  for (std::size_t i = 0; i < out.draws.size(); ++i) out.draws[i].log_n = donor[i % donor.size()].log_n;
  return out;
}

double expected_exceedances(const ForecastContext& ctx, TransformedMark a) { return exceedances_at(ctx, a.x); }

double record_probability(const ForecastContext& ctx, TransformedMark a) {
  if (ctx.t_f <= 0.0) return 0.0;
  return record_probability_at(ctx, a.x);
}

ExpectedBest expected_best(const ForecastContext& ctx) {
  if (ctx.draws.empty()) throw DomainError("forecast context without posterior draws");
  if (!(ctx.t_f > 0.0)) throw DomainError("expected_best needs a positive horizon");
  const double sigma = ctx.mean_sigma();
  double lo = ctx.best - 6.0 * sigma;
  double hi = ctx.w_k + 2.0 * sigma;

  constexpr double kLeak = 1e-6;
  constexpr int kMaxExtensions = 200;
  int extensions = 0;
  while (record_probability_at(ctx, lo) > 0.5 * kLeak && extensions++ < kMaxExtensions) lo -= 2.0 * sigma;
  while (1.0 - record_probability_at(ctx, hi) > 0.5 * kLeak && extensions++ < kMaxExtensions) hi += 2.0 * sigma;
  if (extensions >= kMaxExtensions)
    throw IntegrationUnstable("best-mark density leaks mass beyond [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");

  constexpr int kMaxRefinements = 8;
  std::size_t intervals = 256;
  GridMean previous = integrate_on_grid(ctx, lo, hi, intervals);
  for (int r = 1; r <= kMaxRefinements; ++r) {
    intervals *= 2;
    const GridMean current = integrate_on_grid(ctx, lo, hi, intervals);
    if (std::abs(current.mean - previous.mean) < 1e-4) {
      if (current.mass < 1.0 - kLeak)
        throw IntegrationUnstable("best-mark density captured only " + std::to_string(current.mass) + " mass");
      if (!current.unimodal) throw IntegrationUnstable("best-mark density is not unimodal");
      return {TransformedMark{current.mean}, current.mass, intervals + 1, r};
    }
    previous = current;
  }
  throw IntegrationUnstable("expected best did not converge after grid refinement");
}

double score(double mark, const EventSpec& event, double anchor) {
  const double x = encode_mark(event, mark).x;
  const double x0 = encode_mark(event, anchor).x;
  return kAnchorPoints * (1.0 - (x - x0) / kLn2);
}

double mark_for_score(double points, const EventSpec& event, double anchor) {
  const double x0 = encode_mark(event, anchor).x;
  return decode_mark(event, TransformedMark{x0 + kLn2 * (1.0 - points / kAnchorPoints)});
}

TransformedMark anchor_mark(const ForecastContext& ctx, double target_rate) {
  if (!(target_rate > 0.0)) throw DomainError("anchor rate must be positive");
  const double sigma = ctx.mean_sigma();
  double lo = ctx.best - 5.0 * sigma;
  double hi = ctx.w_k;
  const double tol = 1e-3 * target_rate;

  int extensions = 0;
  while (exceedances_at(ctx, hi) < target_rate) {
    if (++extensions > 60) throw AnchorNotFound("exceedance rate never reaches the target");
    hi += sigma;
  }
  if (std::abs(exceedances_at(ctx, hi) - target_rate) < tol) return {hi};
  while (exceedances_at(ctx, lo) > target_rate) {
    if (++extensions > 120) throw AnchorNotFound("exceedance rate never falls to the target");
    lo -= sigma;
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double rate = exceedances_at(ctx, mid);
    if (std::abs(rate - target_rate) < tol) return {mid};
    (rate < target_rate ? lo : hi) = mid;
  }
  throw AnchorNotFound("bisection did not reach the rate tolerance");
}

double improvement(double a_new, double a_old, const EventSpec& event) {
  if (!(a_new > 0.0) || !(a_old > 0.0)) throw DomainError("improvement needs positive marks");
  const double r = std::log(a_new / a_old);
  return event.lower_is_better() ? -r : r;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("pearson: length mismatch");
  if (xs.size() < 3) throw DomainError("pearson: need at least 3 pairs");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedCorrelation("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> default_point_grid() {
  std::vector<double> grid;
  for (int p = 0; p <= 1400; p += 50) grid.push_back(p);
  return grid;
}

ScoreTable make_score_table(const EventSpec& event, TransformedMark a0, std::span<const double> points,
                            std::size_t n_k) {
  ScoreTable table;
  table.event_id = event.event_id;
  table.event = event;
  table.a0 = a0;
  table.low_data = n_k < kLowDataThreshold;
  const double anchor = decode_mark(event, a0);
  for (double p : points) table.rows.emplace_back(p, p == kAnchorPoints ? anchor : mark_for_score(p, event, anchor));
  return table;
}

void write_score_table(std::ostream& out, const ScoreTable& table, char delimiter) {
  out << "# event=" << table.event_id << " anchor=" << format_mark(table.event, decode_mark(table.event, table.a0))
      << " anchor_rate=" << kAnchorRate;
  if (table.low_data) out << " warning=low-data";
  out << '\n' << "points" << delimiter << "mark" << '\n';
  for (const auto& [points, mark] : table.rows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", points);
    out << buf << delimiter << format_mark(table.event, mark) << '\n';
  }
}

std::optional<ReferenceMark> reference_mark(const EventData& data, int rank, Date as_of) {
  if (rank < 1) throw DomainError("reference rank must be >= 1");
  std::vector<double> xs;
  for (const auto& m : data.marks)
    if (m.date < as_of) xs.push_back(encode_mark(data.event, m.value).x);
  if (xs.size() < static_cast<std::size_t>(rank)) return std::nullopt;
  std::nth_element(xs.begin(), xs.begin() + (rank - 1), xs.end());
  const double x = xs[static_cast<std::size_t>(rank - 1)];
  return ReferenceMark{data.event.event_id, rank, {x}, decode_mark(data.event, {x}), as_of};
}

}  // namespace tailcast
