#include "tailcast/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tailcast/emprior.hpp"
#include "tailcast/error.hpp"
#include "tailcast/fitio.hpp"
#include "tailcast/stats.hpp"

namespace tailcast::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

DataMode parse_mode(const std::string& s) {
  if (s == "all") return DataMode::AllPrior;
  if (s == "five-years") return DataMode::FiveYears;
  throw DomainError("unknown mode '" + s + "' (expected all or five-years)");
}

const char* mode_name(DataMode m) { return m == DataMode::FiveYears ? "five-years" : "all"; }

fs::path fits_dir(const RunConfig& c) { return c.out_dir / "fits"; }

std::map<std::string, FitResult> load_fits(const RunConfig& config) {
  std::map<std::string, FitResult> fits;
  if (!fs::exists(fits_dir(config))) return fits;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(fits_dir(config)))
    if (entry.path().extension() == ".fit") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  const std::set<std::string> wanted(config.events.begin(), config.events.end());
  for (const auto& f : files) {
    auto fit = load_fit(f);
    if (!wanted.empty() && !wanted.count(fit.event_id)) continue;
    fits.emplace(fit.event_id, std::move(fit));
  }
  return fits;
}

std::string shortest(double v) {
  nlohmann::json j = v;
  return j.dump();
}

}  // namespace

void apply_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "data_dir") {
    c.data_dir = value;
  } else if (key == "out_dir" || key == "out") {
    c.out_dir = value;
  } else if (key == "events") {
    c.events = value == "all" ? std::vector<std::string>{} : split_list(value);
  } else if (key == "mode") {
    c.mode = parse_mode(value);
  } else if (key == "cutoff") {
    c.cutoff = std::stoi(value);
  } else if (key == "tf") {
    c.t_f = std::stod(value);
  } else if (key == "seed") {
    c.sampler.seed = std::stoull(value);
  } else if (key == "prior") {
    if (value != "weak" && value != "empirical") throw DomainError("prior must be weak or empirical");
    c.empirical_prior = value == "empirical";
  } else if (key == "burn_in_steps") {
    c.sampler.burn_in_steps = std::stoi(value);
  } else if (key == "batches") {
    c.sampler.batches = std::stoi(value);
  } else if (key == "batch_len") {
    c.sampler.batch_len = std::stoi(value);
  } else if (key == "chains") {
    c.sampler.chains = std::stoi(value);
  } else if (key == "step_scale") {
    c.sampler.step_scale = std::stod(value);
  } else if (key == "scale_ratio") {
    c.sampler.scale_ratio = std::stod(value);
  } else if (key == "max_retunes") {
    c.sampler.max_retunes = std::stoi(value);
  } else if (key == "accept_lo") {
    c.sampler.accept_lo = std::stod(value);
  } else if (key == "accept_hi") {
    c.sampler.accept_hi = std::stod(value);
  } else if (key == "ranks") {
    c.ranks.clear();
    for (const auto& r : split_list(value)) c.ranks.push_back(std::stoi(r));
  } else if (key == "windows") {
    c.windows = std::stoi(value);
  } else if (key == "points") {
    c.point_grid.clear();
    for (const auto& p : split_list(value)) c.point_grid.push_back(std::stod(p));
  } else {
    throw DomainError("unknown configuration key '" + key + "'");
  }
}

void apply_config_file(RunConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config", "expected key = value: '" + line + "'");
    apply_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::vector<EventData> load_corpus(const RunConfig& config, std::ostream& log) {
  if (config.data_dir.empty() || !fs::is_directory(config.data_dir))
    throw Error("data directory '" + config.data_dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(config.data_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".tsv" || ext == ".txt")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, EventData> by_id;
  for (const auto& f : files) {
    auto data = read_event_file(f);
    if (by_id.count(data.event.event_id)) throw Error("duplicate event id " + data.event.event_id);
    by_id.emplace(data.event.event_id, std::move(data));
  }
  std::vector<EventData> corpus;
  if (config.events.empty()) {
    for (auto& [id, data] : by_id) corpus.push_back(std::move(data));
  } else {
    std::vector<std::string> ids = config.events;
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        log << "warning: no data file for event " << id << '\n';
        continue;
      }
      corpus.push_back(std::move(it->second));
    }
  }
  return corpus;
}

std::optional<std::string> mile_donor(const std::string& event_id) {
  const std::string suffix = "1mile";
  if (event_id.size() <= suffix.size() || event_id.compare(event_id.size() - suffix.size(), suffix.size(), suffix) != 0)
    return std::nullopt;
  return event_id.substr(0, event_id.size() - suffix.size()) + "1500m";
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", p);
  return buf;
}

int cmd_fit(const RunConfig& config, std::ostream& log) {
  const auto corpus = load_corpus(config, log);
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  std::vector<FitInput> inputs;
  for (const auto& data : corpus) {
    try {
      inputs.push_back(make_fit_input(data, config.mode, config.cutoff));
    } catch (const EmptyListError& e) {
      log << "warning: skipping " << data.event.event_id << ": " << e.what() << '\n';
      skipped.push_back({{"event_id", data.event.event_id}, {"reason", e.what()}});
    }
  }
  if (inputs.empty()) {
    log << "error: no events to fit\n";
    return 1;
  }

  EventFits first_pass;
  EventFits final_pass;
  HyperPrior prior = HyperPrior::weakly_informative();
  if (config.empirical_prior) {
    try {
      auto result = two_pass_fit(inputs, config.sampler);
      first_pass = std::move(result.first_pass);
      final_pass = std::move(result.second_pass);
      prior = result.prior;
    } catch (const InsufficientEvents& e) {
      log << "error: InsufficientEvents: " << e.what() << "\n"
          << "hint: rerun with --prior weak to fit each event under the weakly-informative prior\n";
      return 2;
    }
  } else {
    final_pass = fit_all(inputs, prior, config.sampler);
  }

  fs::create_directories(fits_dir(config));
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  std::size_t converged = 0;
  for (const auto& [id, fit] : final_pass.fits) {
    const fs::path file = fits_dir(config) / (id + ".fit");
    save_fit(file, fit);
    converged += fit.converged ? 1 : 0;
    nlohmann::ordered_json entry{{"event_id", id},
                                 {"fit_file", fs::relative(file, config.out_dir).string()},
                                 {"n_k", fit.meta.n_k},
                                 {"t_m", fit.meta.t_m},
                                 {"mpsrf", std::isfinite(fit.mpsrf) ? nlohmann::ordered_json(fit.mpsrf) : nullptr},
                                 {"converged", fit.converged},
                                 {"expected_population", fit.expected_population()}};
    if (const auto it = first_pass.fits.find(id); it != first_pass.fits.end()) {
      entry["first_pass_mpsrf"] =
          std::isfinite(it->second.mpsrf) ? nlohmann::ordered_json(it->second.mpsrf) : nullptr;
      entry["first_pass_expected_population"] = it->second.expected_population();
    }
    if (!fit.meta.failed_chains.empty()) entry["failed_chains"] = fit.meta.failed_chains;
    if (fit.meta.n_k < kLowDataThreshold) entry["warning"] = "low-data";
    events.push_back(entry);
  }
  for (const auto& [id, why] : final_pass.failures) skipped.push_back({{"event_id", id}, {"reason", why}});

  const nlohmann::ordered_json hyper = nlohmann::ordered_json::parse(hyperprior_json(prior));
  nlohmann::ordered_json manifest{
      {"format", "tailcast-manifest/1"},
      {"seed", config.sampler.seed},
      {"mode", mode_name(config.mode)},
      {"cutoff", config.cutoff ? nlohmann::ordered_json(*config.cutoff) : nullptr},
      {"prior", hyper},
      {"passes", config.empirical_prior ? 2 : 1},
      {"sampler_note", "both passes use the same sampler configuration"},
      {"events", events},
      {"skipped", skipped},
      {"convergence",
       {{"threshold", 1.1}, {"converged", converged}, {"fitted", final_pass.fits.size()},
        {"all_converged", converged == final_pass.fits.size()}}}};
  write_file_atomic(config.out_dir / "manifest.json", manifest.dump(2) + "\n");
  write_file_atomic(config.out_dir / "hyperprior.json", hyperprior_json(prior) + "\n");

  log << "fitted " << final_pass.fits.size() << " event(s), " << converged << " with mpsrf < 1.1\n";
  if (final_pass.fits.empty()) return 1;
  return 0;
}

int cmd_tables(const RunConfig& config, std::ostream& log) {
  const auto fits = load_fits(config);
  if (fits.empty()) {
    log << "error: no fit files under " << fits_dir(config) << " (run `fit` first)\n";
    return 1;
  }
  fs::create_directories(config.out_dir / "tables");
  std::ostringstream summary;
  summary << "event\tanchor\tn_k\twarning\n";
  int failures = 0;
  for (const auto& [id, fit] : fits) {
    ForecastContext ctx = ForecastContext::from_fit(fit, 1.0);
    if (const auto donor = mile_donor(id)) {
      if (const auto it = fits.find(*donor); it != fits.end()) {
        ctx = ctx.with_population_from(it->second.pooled);
      } else {
        log << "warning: " << id << ": no " << *donor << " fit to borrow the population size from\n";
      }
    }
    if (!fit.converged) log << "warning: " << id << " did not converge (mpsrf " << fit.mpsrf << ")\n";
    try {
      const auto a0 = anchor_mark(ctx);
      const auto table = make_score_table(fit.meta.event, a0, config.point_grid, fit.meta.n_k);
      std::ostringstream out;
      write_score_table(out, table);
      write_file_atomic(config.out_dir / "tables" / (id + ".tsv"), out.str());
      summary << id << '\t' << format_mark(fit.meta.event, decode_mark(fit.meta.event, a0)) << '\t' << fit.meta.n_k
              << '\t' << (table.low_data ? "low-data" : "") << '\n';
      if (table.low_data) log << "warning: " << id << " has only " << fit.meta.n_k << " marks; scores are unreliable\n";
    } catch (const AnchorNotFound& e) {
      log << "error: " << id << ": " << e.what() << '\n';
      ++failures;
    }
  }
  write_file_atomic(config.out_dir / "tables" / "summary.tsv", summary.str());
  return failures == static_cast<int>(fits.size()) ? 1 : 0;
}

int cmd_forecast(const RunConfig& config, std::ostream& log) {
  const auto fits = load_fits(config);
  if (fits.empty()) {
    log << "error: no fit files under " << fits_dir(config) << " (run `fit` first)\n";
    return 1;
  }
  // The record is the all-time best in the data file when available; the fit
  // window may not contain it.
  std::map<std::string, RawMark> records;
  if (!config.data_dir.empty() && fs::is_directory(config.data_dir)) {
    for (const auto& data : load_corpus(config, log)) {
      const auto best = std::min_element(data.marks.begin(), data.marks.end(), [&](const RawMark& a, const RawMark& b) {
        return encode_mark(data.event, a.value) < encode_mark(data.event, b.value);
      });
      if (best != data.marks.end()) records.emplace(data.event.event_id, *best);
    }
  }

  struct Row {
    std::string id;
    std::string record;
    std::string date;
    double probability;
    std::string expected;
  };
  std::vector<Row> rows;
  for (const auto& [id, fit] : fits) {
    const auto& event = fit.meta.event;
    RawMark record{decode_mark(event, {fit.meta.best}), {}, {}};
    std::string date = "-";
    if (const auto it = records.find(id); it != records.end()) {
      record = it->second;
      date = format_date(record.date);
    }
    const ForecastContext ctx = ForecastContext::from_fit(fit, config.t_f);
    const double p = record_probability(ctx, encode_mark(event, record.value));
    std::string expected = "n/a";
    if (config.t_f > 0.0) {
      try {
        expected = format_mark(event, decode_mark(event, expected_best(ctx).mark));
      } catch (const IntegrationUnstable& e) {
        log << "warning: " << id << ": " << e.what() << '\n';
      }
    }
    rows.push_back({id, format_mark(event, record.value), date, p, expected});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.probability < b.probability; });

  std::ostringstream out;
  out << "# horizon_years=" << shortest(config.t_f) << '\n';
  out << "event\trecord\tdate\tprob_broken\texpected_best\n";
  for (const auto& r : rows)
    out << r.id << '\t' << r.record << '\t' << r.date << '\t' << format_probability(r.probability) << '\t'
        << r.expected << '\n';
  fs::create_directories(config.out_dir);
  write_file_atomic(config.out_dir / "forecast.tsv", out.str());
  return 0;
}

int cmd_backtest(const RunConfig& config, std::ostream& log) {
  const auto corpus = load_corpus(config, log);
  BacktestSpec spec;
  spec.cutoff_year = config.cutoff.value_or(2008);
  spec.windows = BacktestSpec::growing_windows(spec.cutoff_year, config.windows);
  spec.data_mode = config.mode;
  spec.reference_ranks = config.ranks;
  spec.empirical_prior = config.empirical_prior;

  BacktestReport report;
  try {
    report = run_backtest(corpus, spec, config.sampler);
  } catch (const InsufficientEvents& e) {
    log << "error: InsufficientEvents: " << e.what() << "\nhint: rerun with --prior weak\n";
    return 2;
  }
  const fs::path dir = config.out_dir / "backtest";
  fs::create_directories(dir);
  std::ostringstream tables, records;
  write_backtest_tables(tables, report);
  write_backtest_records(records, report);
  write_file_atomic(dir / "report.txt", tables.str());
  write_file_atomic(dir / "records.tsv", records.str());

  std::size_t invalid = 0;
  for (const auto& c : report.cells) invalid += c.correlation ? 0 : 1;
  if (invalid > 0) log << "warning: " << invalid << " of " << report.cells.size() << " cells are invalid\n";
  return 0;
}

int cmd_validate_data(const RunConfig& config, std::ostream& out) {
  if (config.data_dir.empty() || !fs::is_directory(config.data_dir)) {
    out << "error: data directory '" << config.data_dir.string() << "' does not exist\n";
    return 1;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(config.data_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".tsv" || ext == ".txt")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  int bad = 0;
  std::set<std::string> seen;
  for (const auto& f : files) {
    try {
      const auto data = read_event_file(f);
      if (!seen.insert(data.event.event_id).second) throw Error("duplicate event id " + data.event.event_id);
      if (data.marks.empty()) throw EmptyListError("no records");
      const auto list = make_performance_list(data, DateWindow::all());
      out << data.event.event_id << '\t' << list.n_k << " marks\t" << format_date(list.first_date) << ".."
          << format_date(list.last_date) << "\tbest " << format_mark(data.event, list.records.front().value)
          << "\tworst " << format_mark(data.event, list.records.back().value)
          << (list.n_k < kLowDataThreshold ? "\twarning: low-data" : "") << '\n';
    } catch (const Error& e) {
      out << f.filename().string() << "\tinvalid: " << e.what() << '\n';
      ++bad;
    }
  }
  if (files.empty()) {
    out << "error: no list files in " << config.data_dir.string() << '\n';
    return 1;
  }
  return bad == 0 ? 0 : 1;
}

int run(int argc, char** argv) {
  CLI::App app{"tailcast: tail models of top athletic performances"};
  app.require_subcommand(1);

  RunConfig config;
  if (const char* env = std::getenv("TAILCAST_DATA")) config.data_dir = env;

  std::string config_file, data_dir, out_dir, mode, prior, events, ranks;
  std::optional<int> cutoff;
  std::optional<double> tf;
  std::optional<std::uint64_t> seed;
  std::optional<int> windows;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "flat key = value configuration file");
    sub->add_option("--data", data_dir, "directory of list files (default $TAILCAST_DATA)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--events", events, "comma-separated event ids, or all");
    sub->add_option("--mode", mode, "all | five-years")->check(CLI::IsMember({"all", "five-years"}));
    sub->add_option("--cutoff", cutoff, "fit on data before this calendar year");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--prior", prior, "weak | empirical")->check(CLI::IsMember({"weak", "empirical"}));
    sub->add_option("--tf", tf, "forecast horizon in years");
  };
  auto* fit = app.add_subcommand("fit", "fit every event (two-pass empirical prior by default)");
  auto* tables = app.add_subcommand("tables", "emit 1300-point scoring tables from persisted fits");
  auto* forecast = app.add_subcommand("forecast", "record-break probabilities and expected best marks");
  auto* backtest = app.add_subcommand("backtest", "fit before a cutoff and correlate with later seasons");
  auto* validate = app.add_subcommand("validate-data", "check list files parse and summarize them");
  for (auto* sub : {fit, tables, forecast, backtest, validate}) add_common(sub);
  backtest->add_option("--ranks", ranks, "reference ranks, e.g. 10,25,50,100");
  backtest->add_option("--windows", windows, "number of growing evaluation spans");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!config_file.empty()) apply_config_file(config, config_file);
    if (!data_dir.empty()) config.data_dir = data_dir;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!events.empty()) apply_config_value(config, "events", events);
    if (!mode.empty()) config.mode = parse_mode(mode);
    if (cutoff) config.cutoff = cutoff;
    if (seed) config.sampler.seed = *seed;
    if (!prior.empty()) config.empirical_prior = prior == "empirical";
    if (tf) config.t_f = *tf;
    if (!ranks.empty()) apply_config_value(config, "ranks", ranks);
    if (windows) config.windows = *windows;
    if (!(config.t_f >= 0.0)) throw DomainError("--tf must be non-negative");
    config.sampler.validate();

    if (*fit) return cmd_fit(config, std::cerr);
    if (*tables) return cmd_tables(config, std::cerr);
    if (*forecast) return cmd_forecast(config, std::cerr);
    if (*backtest) return cmd_backtest(config, std::cerr);
    if (*validate) return cmd_validate_data(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace tailcast::cli
