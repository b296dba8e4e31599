#include "tailcast/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "tailcast/error.hpp"

namespace tailcast {

namespace {

constexpr double kOneDay = 1.0 / 365.25;

bool has_outcome_data(const EventData& data, const DateWindow& window) {
  return std::any_of(data.marks.begin(), data.marks.end(), [&](const RawMark& m) { return window.contains(m.date); });
}

std::string format_cell_value(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

DateWindow fit_window(DataMode mode, std::optional<int> cutoff_year) {
  if (!cutoff_year) {
    if (mode == DataMode::FiveYears) throw DomainError("five-year fits need a cutoff year");
    return DateWindow::all();
  }
  if (mode == DataMode::FiveYears) return DateWindow::years(*cutoff_year - 5, *cutoff_year);
  DateWindow w = DateWindow::all();
  w.end = DateWindow::years(*cutoff_year, *cutoff_year + 1).start;
  return w;
}

FitInput make_fit_input(const EventData& data, DataMode mode, std::optional<int> cutoff_year) {
  FitInput input{make_performance_list(data, fit_window(mode, cutoff_year)), kFiveYears};
  if (mode == DataMode::AllPrior)
    input.t_m = std::max(years_between(input.list.first_date, input.list.last_date), kOneDay);
  return input;
}

std::string EvaluationSpan::label() const {
  return first_year == last_year ? std::to_string(first_year)
                                 : std::to_string(first_year) + "-" + std::to_string(last_year);
}

std::vector<EvaluationSpan> BacktestSpec::growing_windows(int cutoff_year, int count) {
  std::vector<EvaluationSpan> spans;
  for (int i = 0; i < count; ++i) spans.push_back({cutoff_year, cutoff_year + i});
  return spans;
}

const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::Exceedances:
      return "exceedances";
    case Statistic::Improvement:
      return "improvement";
    case Statistic::Record:
      return "record";
  }
  return "?";
}

const BacktestCell* BacktestReport::find(Statistic statistic, int rank, const EvaluationSpan& span) const {
  for (const auto& c : cells)
    if (c.statistic == statistic && c.rank == rank && c.span.first_year == span.first_year &&
        c.span.last_year == span.last_year)
      return &c;
  return nullptr;
}

std::size_t realized_exceedances(const EventData& data, const ReferenceMark& reference, const DateWindow& window) {
  std::size_t count = 0;
  for (const auto& m : data.marks)
    if (window.contains(m.date) && encode_mark(data.event, m.value).x < reference.mark.x) ++count;
  return count;
}

double realized_improvement(const EventData& data, const ReferenceMark& reference, const DateWindow& window) {
  const RawMark* best = nullptr;
  for (const auto& m : data.marks) {
    if (!window.contains(m.date)) continue;
    if (!best || encode_mark(data.event, m.value).x < encode_mark(data.event, best->value).x) best = &m;
  }
  if (!best) throw MissingOutcome("no marks for " + data.event.event_id + " in the evaluation window");
  return improvement(best->value, reference.raw, data.event);
}

BacktestReport run_backtest(std::span<const EventData> corpus, const BacktestSpec& spec, const SamplerConfig& config) {
  BacktestReport report;
  report.spec = spec;

  // Fitting sees only pre-cutoff data.
  std::vector<FitInput> inputs;
  std::vector<const EventData*> sources;
  for (const auto& data : corpus) {
    try {
      inputs.push_back(make_fit_input(data, spec.data_mode, spec.cutoff_year));
      sources.push_back(&data);
    } catch (const EmptyListError& e) {
      report.excluded.emplace(data.event.event_id, e.what());
    }
  }

  EventFits fits;
  if (spec.empirical_prior) {
    auto two_pass = two_pass_fit(inputs, config);
    report.prior = two_pass.prior;
    fits = std::move(two_pass.second_pass);
  } else {
    report.prior = HyperPrior::weakly_informative();
    fits = fit_all(inputs, report.prior, config);
  }
  for (const auto& [id, why] : fits.failures) report.excluded.emplace(id, why);

  const Date cutoff = DateWindow::years(spec.cutoff_year, spec.cutoff_year + 1).start;
  std::vector<const EventData*> events;
  for (const auto* data : sources) {
    if (!fits.fits.count(data->event.event_id)) continue;
    events.push_back(data);
  }
  std::sort(events.begin(), events.end(),
            [](const EventData* a, const EventData* b) { return a->event.event_id < b->event.event_id; });

  auto finish = [](BacktestCell& cell) {
    if (cell.events.size() < 3) {
      cell.note = "fewer than 3 events with outcomes";
      return;
    }
    try {
      cell.correlation = pearson(cell.predicted, cell.actual);
    } catch (const UndefinedCorrelation& e) {
      cell.note = e.what();
    }
  };

  for (const auto& span : spec.windows) {
    const DateWindow window = span.window();
    std::vector<const EventData*> covered;
    for (const auto* data : events) {
      if (has_outcome_data(*data, window)) {
        covered.push_back(data);
      } else {
        report.excluded.emplace(data->event.event_id + "@" + span.label(), "no outcome data");
      }
    }

    for (int rank : spec.reference_ranks) {
      BacktestCell counts{span, rank, Statistic::Exceedances, {}, {}, {}, {}, {}};
      BacktestCell gains{span, rank, Statistic::Improvement, {}, {}, {}, {}, {}};
      for (const auto* data : covered) {
        const auto reference = reference_mark(*data, rank, cutoff);
        if (!reference) continue;
        const auto& fit = fits.fits.at(data->event.event_id);
        const ForecastContext ctx = ForecastContext::from_fit(fit, span.years());

        counts.events.push_back(data->event.event_id);
        counts.predicted.push_back(expected_exceedances(ctx, reference->mark) * span.years());
        counts.actual.push_back(static_cast<double>(realized_exceedances(*data, *reference, window)));

        try {
          const double predicted_best = decode_mark(data->event, expected_best(ctx).mark);
          const double predicted_gain = improvement(predicted_best, reference->raw, data->event);
          const double actual_gain = realized_improvement(*data, *reference, window);
          gains.events.push_back(data->event.event_id);
          gains.predicted.push_back(predicted_gain);
          gains.actual.push_back(actual_gain);
        } catch (const IntegrationUnstable& e) {
          report.excluded.emplace(data->event.event_id + "@" + span.label() + "/improvement", e.what());
        }
      }
      finish(counts);
      finish(gains);
      report.cells.push_back(std::move(counts));
      report.cells.push_back(std::move(gains));
    }

    BacktestCell records{span, 0, Statistic::Record, {}, {}, {}, {}, {}};
    for (const auto* data : covered) {
      const auto record = reference_mark(*data, 1, cutoff);
      if (!record) continue;
      const ForecastContext ctx = ForecastContext::from_fit(fits.fits.at(data->event.event_id), span.years());
      records.events.push_back(data->event.event_id);
      records.predicted.push_back(record_probability(ctx, record->mark));
      records.actual.push_back(realized_exceedances(*data, *record, window) > 0 ? 1.0 : 0.0);
    }
    finish(records);
    report.cells.push_back(std::move(records));
  }
  return report;
}

void write_backtest_tables(std::ostream& out, const BacktestReport& report) {
  const auto& spec = report.spec;
  out << "cutoff " << spec.cutoff_year << ", mode " << (spec.data_mode == DataMode::FiveYears ? "five-years" : "all")
      << ", prior " << to_string(report.prior.provenance) << '\n';

  for (Statistic statistic : {Statistic::Exceedances, Statistic::Improvement}) {
    out << '\n' << "Pearson correlation, predicted vs actual " << to_string(statistic) << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-12s", "year(s)");
    out << buf;
    for (int rank : spec.reference_ranks) {
      std::snprintf(buf, sizeof buf, "%9s", (std::to_string(rank) + "th").c_str());
      out << buf;
    }
    out << '\n';
    for (const auto& span : spec.windows) {
      std::snprintf(buf, sizeof buf, "%-12s", span.label().c_str());
      out << buf;
      for (int rank : spec.reference_ranks) {
        const auto* cell = report.find(statistic, rank, span);
        std::snprintf(buf, sizeof buf, "%9s", format_cell_value(cell ? cell->correlation : std::nullopt).c_str());
        out << buf;
      }
      out << '\n';
    }
  }

  out << '\n' << "Pearson correlation, record probability vs record set" << '\n';
  for (const auto& span : spec.windows) {
    const auto* cell = report.find(Statistic::Record, 0, span);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-12s%9s", span.label().c_str(),
                  format_cell_value(cell ? cell->correlation : std::nullopt).c_str());
    out << buf << '\n';
  }
  if (!report.excluded.empty()) {
    out << '\n' << "excluded:" << '\n';
    for (const auto& [what, why] : report.excluded) out << "  " << what << ": " << why << '\n';
  }
}

void write_backtest_records(std::ostream& out, const BacktestReport& report, char delimiter) {
  const char d = delimiter;
  out << "window" << d << "rank" << d << "statistic" << d << "event" << d << "predicted" << d << "actual" << d
      << "pearson" << '\n';
  for (const auto& cell : report.cells) {
    const std::string r = format_cell_value(cell.correlation);
    if (cell.events.empty()) {
      out << cell.span.label() << d << cell.rank << d << to_string(cell.statistic) << d << "-" << d << "" << d << ""
          << d << r << '\n';
      continue;
    }
    for (std::size_t i = 0; i < cell.events.size(); ++i) {
      char values[64];
      std::snprintf(values, sizeof values, "%.9g%c%.9g", cell.predicted[i], d, cell.actual[i]);
      out << cell.span.label() << d << cell.rank << d << to_string(cell.statistic) << d << cell.events[i] << d
          << values << d << r << '\n';
    }
  }
}

}  // namespace tailcast
