#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tailcast/backtest.hpp"
#include "tailcast/sampler.hpp"

namespace tailcast::cli {

struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "tailcast-out";
  std::vector<std::string> events;  // empty selects every event found
  SamplerConfig sampler;
  DataMode mode = DataMode::AllPrior;
  std::optional<int> cutoff;
  bool empirical_prior = true;
  std::vector<double> point_grid = default_point_grid();
  double t_f = 1.0;
  std::vector<int> ranks{10, 25, 50, 100};
  int windows = 4;
};

/// Flat `key = value` lines; `#` starts a comment.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Every list file in data_dir (sorted by event id), restricted to config.events.
std::vector<EventData> load_corpus(const RunConfig& config, std::ostream& log);

int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_tables(const RunConfig& config, std::ostream& log);
int cmd_forecast(const RunConfig& config, std::ostream& log);
int cmd_backtest(const RunConfig& config, std::ostream& log);
int cmd_validate_data(const RunConfig& config, std::ostream& out);

/// For "mens1mile" returns "mens1500m".
std::optional<std::string> mile_donor(const std::string& event_id);

/// Formats a probability in scientific notation with 3 significant digits.
std::string format_probability(double p);

int run(int argc, char** argv);

}  // namespace tailcast::cli
