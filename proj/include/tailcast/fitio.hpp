#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "tailcast/hyperprior.hpp"
#include "tailcast/sampler.hpp"

namespace tailcast {

inline constexpr const char* kFitFormat = "tailcast-fit/1";

/// Line-delimited JSON: one metadata header object, then one record per
/// retained draw {chain_id, draw_index, mu, logN, sigma}.
void write_fit(std::ostream& out, const FitResult& fit);
FitResult read_fit(std::istream& in);

/// Writes to a temporary sibling and renames it into place.
void save_fit(const std::filesystem::path& path, const FitResult& fit);
FitResult load_fit(const std::filesystem::path& path);

std::string hyperprior_json(const HyperPrior& prior);
HyperPrior hyperprior_from_json(const std::string& text);

/// Atomic whole-file write (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace tailcast
