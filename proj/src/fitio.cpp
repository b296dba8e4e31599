#include "tailcast/fitio.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "tailcast/error.hpp"

namespace tailcast {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const HyperPrior& prior) {
  return ordered_json{{"mu_N", prior.mu_N},
                      {"sigma2_N", prior.sigma2_N},
                      {"provenance", to_string(prior.provenance)},
                      {"contributing_events", prior.contributing_events}};
}

HyperPrior prior_from(const nlohmann::json& j) {
  HyperPrior p;
  p.mu_N = j.at("mu_N").get<double>();
  p.sigma2_N = j.at("sigma2_N").get<double>();
  p.provenance = j.at("provenance").get<std::string>() == "empirical" ? PriorProvenance::Empirical
                                                                      : PriorProvenance::WeaklyInformative;
  if (j.contains("contributing_events"))
    p.contributing_events = j.at("contributing_events").get<std::vector<std::string>>();
  return p;
}

ordered_json to_json(const SamplerConfig& c) {
  return ordered_json{{"burn_in_steps", c.burn_in_steps}, {"accept_lo", c.accept_lo},
                      {"accept_hi", c.accept_hi},         {"batches", c.batches},
                      {"batch_len", c.batch_len},         {"chains", c.chains},
                      {"step_scale", c.step_scale},       {"scale_ratio", c.scale_ratio},
                      {"max_retunes", c.max_retunes},     {"seed", c.seed},
                      {"pooled_draws", c.pooled_draws}};
}

SamplerConfig config_from(const nlohmann::json& j) {
  SamplerConfig c;
  c.burn_in_steps = j.at("burn_in_steps").get<int>();
  c.accept_lo = j.at("accept_lo").get<double>();
  c.accept_hi = j.at("accept_hi").get<double>();
  c.batches = j.at("batches").get<int>();
  c.batch_len = j.at("batch_len").get<int>();
  c.chains = j.at("chains").get<int>();
  c.step_scale = j.at("step_scale").get<double>();
  c.scale_ratio = j.at("scale_ratio").get<double>();
  c.max_retunes = j.at("max_retunes").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.pooled_draws = j.at("pooled_draws").get<std::size_t>();
  return c;
}

// JSON has no infinity; a non-finite mpsrf is stored as null.
ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

void write_fit(std::ostream& out, const FitResult& fit) {
  ordered_json chains = ordered_json::array();
  for (const auto& c : fit.chains)
    chains.push_back({{"chain_id", c.chain_id}, {"accept_rate", c.accept_rate}, {"step_scale", c.step_scale}});
  const ordered_json header{{"format", kFitFormat},
                            {"event_id", fit.event_id},
                            {"direction", fit.meta.event.lower_is_better() ? "lower" : "higher"},
                            {"unit", fit.meta.event.unit == Unit::Seconds ? "s" : "cm"},
                            {"seed", fit.meta.config.seed},
                            {"mpsrf", finite_or_null(fit.mpsrf)},
                            {"converged", fit.converged},
                            {"t_m", fit.meta.t_m},
                            {"n_k", fit.meta.n_k},
                            {"w_k", fit.meta.w_k},
                            {"c_k", fit.meta.c_k},
                            {"best", fit.meta.best},
                            {"prior", to_json(fit.meta.prior)},
                            {"config", to_json(fit.meta.config)},
                            {"chains", chains},
                            {"failed_chains", fit.meta.failed_chains}};
  out << header.dump() << '\n';
  for (const auto& c : fit.chains) {
    for (std::size_t i = 0; i < c.draws.size(); ++i) {
      const auto& d = c.draws[i];
      const ordered_json rec{{"chain_id", c.chain_id},
                             {"draw_index", i},
                             {"mu", d.mu},
                             {"logN", d.log_n},
                             {"sigma", finite_or_null(d.sigma)}};
      out << rec.dump() << '\n';
    }
  }
}

FitResult read_fit(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("fit", "empty fit file");
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != kFitFormat)
    throw ParseError("format", "expected " + std::string(kFitFormat));

  FitResult fit;
  fit.event_id = header.at("event_id").get<std::string>();
  fit.meta.event = header.at("direction").get<std::string>() == "lower" ? EventSpec::running(fit.event_id)
                                                                         : EventSpec::field(fit.event_id);
  fit.meta.event.unit = header.at("unit").get<std::string>() == "s" ? Unit::Seconds : Unit::Centimeters;
  fit.mpsrf = header.at("mpsrf").is_null() ? std::numeric_limits<double>::infinity()
                                            : header.at("mpsrf").get<double>();
  fit.converged = header.at("converged").get<bool>();
  fit.meta.t_m = header.at("t_m").get<double>();
  fit.meta.n_k = header.at("n_k").get<std::size_t>();
  fit.meta.w_k = header.at("w_k").get<double>();
  fit.meta.c_k = header.at("c_k").get<double>();
  fit.meta.best = header.at("best").get<double>();
  fit.meta.prior = prior_from(header.at("prior"));
  fit.meta.config = config_from(header.at("config"));
  fit.meta.failed_chains = header.at("failed_chains").get<std::vector<int>>();

  std::map<int, std::size_t> index;
  for (const auto& c : header.at("chains")) {
    PosteriorChain chain;
    chain.chain_id = c.at("chain_id").get<int>();
    chain.accept_rate = c.at("accept_rate").get<double>();
    chain.step_scale = c.at("step_scale").get<double>();
    index[chain.chain_id] = fit.chains.size();
    fit.chains.push_back(std::move(chain));
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    const auto it = index.find(rec.at("chain_id").get<int>());
    if (it == index.end()) throw ParseError("chain_id", "record for an undeclared chain");
    auto& chain = fit.chains[it->second];
    if (rec.at("draw_index").get<std::size_t>() != chain.draws.size())
      throw ParseError("draw_index", "records out of order");
    chain.draws.push_back({rec.at("mu").get<double>(), rec.at("logN").get<double>(),
                           rec.at("sigma").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                     : rec.at("sigma").get<double>()});
  }
  fit.pooled = pool_draws(fit.chains, fit.meta.config.pooled_draws);
  return fit;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_fit(const std::filesystem::path& path, const FitResult& fit) {
  std::ostringstream out;
  write_fit(out, fit);
  write_file_atomic(path, out.str());
}

FitResult load_fit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_fit(in);
}

std::string hyperprior_json(const HyperPrior& prior) { return to_json(prior).dump(2); }

HyperPrior hyperprior_from_json(const std::string& text) { return prior_from(nlohmann::json::parse(text)); }

}  // namespace tailcast
