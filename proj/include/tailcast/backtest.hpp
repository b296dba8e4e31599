#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailcast/emprior.hpp"
#include "tailcast/ingest.hpp"
#include "tailcast/sampler.hpp"
#include "tailcast/stats.hpp"

namespace tailcast {

enum class DataMode { AllPrior, FiveYears };

inline constexpr double kFiveYears = 5.0;

/// Ingestion window for a fit that ends at the start of `cutoff_year`
/// (no cutoff: all data).
DateWindow fit_window(DataMode mode, std::optional<int> cutoff_year);

/// Tail sample and model years for one event: 5.0 for five-year fits,
/// first-to-last mark span for all-data fits.
FitInput make_fit_input(const EventData& data, DataMode mode, std::optional<int> cutoff_year);

/// Whole calendar years [first_year, last_year].
struct EvaluationSpan {
  int first_year = 0;
  int last_year = 0;

  DateWindow window() const { return DateWindow::years(first_year, last_year + 1); }
  double years() const { return static_cast<double>(last_year - first_year + 1); }
  std::string label() const;
};

struct BacktestSpec {
  int cutoff_year = 2008;
  std::vector<EvaluationSpan> windows;
  DataMode data_mode = DataMode::FiveYears;
  std::vector<int> reference_ranks{10, 25, 50, 100};
  bool empirical_prior = true;

  /// cutoff..cutoff, cutoff..cutoff+1, ... (`count` spans).
  static std::vector<EvaluationSpan> growing_windows(int cutoff_year, int count);
};

enum class Statistic { Exceedances, Improvement, Record };
const char* to_string(Statistic s);

struct BacktestCell {
  EvaluationSpan span;
  int rank = 0;  // 0 for record cells
  Statistic statistic = Statistic::Exceedances;
  std::vector<std::string> events;
  std::vector<double> predicted;
  std::vector<double> actual;
  std::optional<double> correlation;
  std::string note;
};

struct BacktestReport {
  BacktestSpec spec;
  HyperPrior prior;
  std::vector<BacktestCell> cells;
  std::map<std::string, std::string> excluded;

  const BacktestCell* find(Statistic statistic, int rank, const EvaluationSpan& span) const;
};

/// Performances in `window` strictly better than the reference.
std::size_t realized_exceedances(const EventData& data, const ReferenceMark& reference, const DateWindow& window);

/// improvement(best mark in window, reference); MissingOutcome when the window is empty.
double realized_improvement(const EventData& data, const ReferenceMark& reference, const DateWindow& window);

BacktestReport run_backtest(std::span<const EventData> corpus, const BacktestSpec& spec, const SamplerConfig& config);

void write_backtest_tables(std::ostream& out, const BacktestReport& report);
void write_backtest_records(std::ostream& out, const BacktestReport& report, char delimiter = '\t');

}  // namespace tailcast
