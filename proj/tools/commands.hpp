#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lpjigsaw/assembly.hpp"
#include "lpjigsaw/ingest.hpp"
#include "lpjigsaw/metrics.hpp"

namespace lpjigsaw::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2 };

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Seeds derived from the one user-facing seed, so the shuffle, the rotations
// and the noise draw from independent streams.
std::uint64_t rotation_seed(std::uint64_t seed);
std::uint64_t noise_seed(std::uint64_t seed);

// Loads an image, optionally center-crops it, slices, rotates (Type 2) and
// adds noise.
PuzzleBundle make_bundle(const std::filesystem::path& image_path, int piece_px, PuzzleType type,
                         std::uint64_t seed, double noise_sigma, bool crop);

struct BenchRow {
  std::string kind;  // "run" or "mean"
  std::string image;
  double sigma = 0.0;
  int run = 0;  // -1 on mean rows
  ReportRow report;
};

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace lpjigsaw::cli
