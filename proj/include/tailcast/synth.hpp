#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tailcast/ingest.hpp"
#include "tailcast/sampler.hpp"

namespace tailcast {

/// One era of a simulated event: performances per year ~ Poisson(rate) drawn
/// from Normal(mu, sigma) in transformed space.
struct SeasonModel {
  int first_year = 2000;
  int last_year = 2000;  // inclusive
  double mu = 0.0;
  double sigma = 1.0;
  double rate = 1000.0;
};

struct SyntheticEvent {
  EventSpec event;
  std::vector<SeasonModel> eras;
  /// Keep only the best `list_size` marks overall (an all-time list).
  std::size_t list_size = 1000;
  /// Use exactly round(rate) performances per year instead of a Poisson count.
  bool fixed_counts = false;
};

EventData simulate_event(const SyntheticEvent& spec, Rng& rng);

/// Best `keep` of `population` i.i.d. draws, dated uniformly inside [first_year, last_year].
EventData simulate_tail(const EventSpec& event, double mu, double sigma, std::size_t population, std::size_t keep,
                        int first_year, int last_year, Rng& rng);

/// A heterogeneous corpus of `events` simulated events ending in `last_year`:
/// each has a recent stationary era preceded by a weaker, thinner one of
/// random length, so all-time reference marks differ in strength relative to
/// the recent population.
std::vector<SyntheticEvent> mixed_corpus(int events, int last_year, Rng& rng);

}  // namespace tailcast
