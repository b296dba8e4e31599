// Writes a simulated corpus of list files for demos and fixtures.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "tailcast/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synth_corpus: simulate lists of top performances"};
  std::string out = "data/sample";
  int events = 6;
  int last_year = 2011;
  std::uint64_t seed = 7;
  app.add_option("--out", out, "output directory");
  app.add_option("--events", events, "number of events");
  app.add_option("--last-year", last_year, "final simulated season");
  app.add_option("--seed", seed, "random seed");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(out);
  tailcast::Rng rng(seed);
  for (const auto& spec : tailcast::mixed_corpus(events, last_year, rng)) {
    const auto data = tailcast::simulate_event(spec, rng);
    std::ofstream file(std::filesystem::path(out) / (spec.event.event_id + ".tsv"));
    tailcast::write_event_data(file, data);
    std::cout << spec.event.event_id << ": " << data.marks.size() << " marks\n";
  }
  return 0;
}
