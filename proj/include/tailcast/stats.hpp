#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailcast/ingest.hpp"
#include "tailcast/sampler.hpp"

namespace tailcast {

/// Posterior draws plus the time frame they are interpreted in.
struct ForecastContext {
  std::vector<PosteriorDraw> draws;
  double t_m = 1.0;  // years of data behind the fit
  double t_f = 1.0;  // forecast horizon in years
  std::size_t n_k = 0;
  double w_k = 0.0;
  double best = 0.0;

  static ForecastContext from_fit(const FitResult& fit, double t_f);
  /// A posterior concentrated on a single (mu, sigma, N).
  static ForecastContext point_mass(double mu, double sigma, double population, double t_m, double t_f);

  double mean_sigma() const;
  /// Same draws with log N taken (cyclically) from `donor`, mu and sigma kept.
  ForecastContext with_population_from(std::span<const PosteriorDraw> donor) const;
};

/// Posterior-expected number of performances per year better than `a`.
double expected_exceedances(const ForecastContext& ctx, TransformedMark a);

/// Posterior-expected probability that `a` is beaten within t_f years.
double record_probability(const ForecastContext& ctx, TransformedMark a);

struct ExpectedBest {
  TransformedMark mark;
  double mass = 0.0;  // cdf mass captured by the final grid
  std::size_t grid_points = 0;
  int refinements = 0;
};

/// Mean of the best mark over the horizon, integrated on a refined grid of
/// finite-difference densities of record_probability.
ExpectedBest expected_best(const ForecastContext& ctx);

inline constexpr double kAnchorPoints = 1300.0;
inline constexpr double kAnchorRate = 0.125;

/// 1300 * (1 - (x - x0) / ln 2): 1300 at the anchor, 100 points per factor 2^(1/13).
double score(double mark, const EventSpec& event, double anchor);
/// Raw mark that scores `points` against `anchor`.
double mark_for_score(double points, const EventSpec& event, double anchor);

/// Mark at which expected_exceedances equals `target_rate`.
TransformedMark anchor_mark(const ForecastContext& ctx, double target_rate = kAnchorRate);

/// Signed relative improvement, positive when a_new is the better mark.
double improvement(double a_new, double a_old, const EventSpec& event);

double pearson(std::span<const double> xs, std::span<const double> ys);

struct ScoreTable {
  std::string event_id;
  EventSpec event;
  TransformedMark a0;
  std::vector<std::pair<double, double>> rows;  // points -> raw mark
  bool low_data = false;
};

inline constexpr std::size_t kLowDataThreshold = 20;

std::vector<double> default_point_grid();
ScoreTable make_score_table(const EventSpec& event, TransformedMark a0, std::span<const double> points,
                            std::size_t n_k);
void write_score_table(std::ostream& out, const ScoreTable& table, char delimiter = '\t');

struct ReferenceMark {
  std::string event_id;
  int rank = 0;
  TransformedMark mark;
  double raw = 0.0;
  Date as_of{};
};

/// rank-th best mark dated strictly before `as_of`, or nullopt when the list is shorter.
std::optional<ReferenceMark> reference_mark(const EventData& data, int rank, Date as_of);

}  // namespace tailcast
