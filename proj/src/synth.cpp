#include "tailcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace tailcast {

namespace {

struct Candidate {
  double x;
  Date date;
};

Date random_day(int year, Rng& rng) {
  using namespace std::chrono;
  const sys_days start{Date{std::chrono::year{year}, January, day{1}}};
  const sys_days end{Date{std::chrono::year{year + 1}, January, day{1}}};
  std::uniform_int_distribution<int> pick(0, static_cast<int>((end - start).count()) - 1);
  return Date{start + days{pick(rng)}};
}

EventData finish(const EventSpec& event, std::vector<Candidate>& pool, std::size_t keep) {
  keep = std::min(keep, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                    [](const Candidate& a, const Candidate& b) { return a.x < b.x; });
  pool.resize(keep);
  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.date < b.date; });
  EventData data{event, {}};
  data.marks.reserve(pool.size());
  for (const auto& c : pool) data.marks.push_back({decode_mark(event, {c.x}), c.date, {}});
  return data;
}

}  // namespace

EventData simulate_event(const SyntheticEvent& spec, Rng& rng) {
  std::vector<Candidate> pool;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& era : spec.eras) {
    std::poisson_distribution<long long> count(era.rate);
    for (int year = era.first_year; year <= era.last_year; ++year) {
      const long long n = spec.fixed_counts ? std::llround(era.rate) : count(rng);
      for (long long i = 0; i < n; ++i) {
        const double x = era.mu + era.sigma * normal(rng);
        // Anything worse than the mean can never enter a list of top marks.
        if (x < era.mu) pool.push_back({x, random_day(year, rng)});
      }
      // Trim as we go to bound memory.
      if (pool.size() > 4 * spec.list_size + 100000) {
        std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.list_size), pool.end(),
                         [](const Candidate& a, const Candidate& b) { return a.x < b.x; });
        pool.resize(spec.list_size);
      }
    }
  }
  return finish(spec.event, pool, spec.list_size);
}

EventData simulate_tail(const EventSpec& event, double mu, double sigma, std::size_t population, std::size_t keep,
                        int first_year, int last_year, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> year(first_year, last_year);
  std::vector<Candidate> pool;
  pool.reserve(population);
  for (std::size_t i = 0; i < population; ++i) {
    const double x = mu + sigma * normal(rng);
    pool.push_back({x, random_day(year(rng), rng)});
  }
  return finish(event, pool, keep);
}

}  // namespace tailcast

namespace tailcast {

std::vector<SyntheticEvent> mixed_corpus(int events, int last_year, Rng& rng) {
  static constexpr double running_bases[] = {10.6, 21.6, 48.5, 108.0, 222.0, 790.0, 1680.0, 7900.0};
  static constexpr double field_bases[] = {205.0, 720.0, 1550.0, 1900.0, 6100.0, 7000.0};
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<SyntheticEvent> out;
  for (int i = 0; i < events; ++i) {
    char id[32];
    const bool field = i % 3 == 2;
    std::snprintf(id, sizeof id, "%s%02d", field ? "field" : "run", i + 1);
    SyntheticEvent ev;
    ev.event = field ? EventSpec::field(id) : EventSpec::running(id);
    const double base = field ? field_bases[(i / 3) % 6] : running_bases[i % 8];
    const double mu = encode_mark(ev.event, base).x;
    const double sigma = 0.025 + 0.035 * u(rng);
    const double rate = std::exp(std::log(300.0) + u(rng) * std::log(5000.0 / 300.0));
    const int recent_years = 8;
    const int history = 2 + static_cast<int>(u(rng) * 30.0);
    const int recent_start = last_year - recent_years + 1;

    ev.eras.push_back({recent_start - history, recent_start - 1, mu + sigma * 0.4 * u(rng), sigma,
                       rate * (0.2 + 0.8 * u(rng))});
    ev.eras.push_back({recent_start, last_year, mu, sigma, rate});
    // Roughly the z = -2 tail of the recent era over the whole history.
    ev.list_size = static_cast<std::size_t>(std::max(150.0, 0.0228 * rate * (recent_years + history)));
    out.push_back(std::move(ev));
  }
  return out;
}

}  // namespace tailcast
