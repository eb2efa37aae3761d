#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lpjigsaw/assembly.hpp"
#include "lpjigsaw/core.hpp"
#include "lpjigsaw/ingest.hpp"

namespace lpjigsaw {

// Type 2 results have no canonical frame: by default the truth is compared
// under whichever of its four global quarter turns scores best.
enum class FramePolicy { kBestOfFour, kStrict };

struct ScoreReport {
  double direct = 0.0;
  double neighbor = 0.0;
  double largest_component = 0.0;
  bool perfect = false;
};

// Fraction of pieces at their true cell, and for Type 2 with their true
// rotation, under the frame policy.
double direct_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type,
                    FramePolicy policy = FramePolicy::kBestOfFour);

// Fraction of true right and down adjacencies reproduced with the same
// relative orientation. For Type 2 each reproduced pair must be rotated
// consistently with its own displacement, in any global frame.
double neighbor_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type);

// Largest set of pieces connected through truth-correct adjacencies, over n.
// Equivalent to sliding that set across the truth.
double largest_component_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type);

// Same, over solver components (which may be non-rectangular and overlap
// each other's coordinates).
double largest_component_score(std::span<const Component> components, const PieceCatalog& catalog,
                               const GroundTruth& truth, PuzzleType type);

bool perfect_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type);

ScoreReport score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type,
                  FramePolicy policy = FramePolicy::kBestOfFour);

struct ReportRow {
  std::string image;
  std::string type;     // "type1" or "type2"
  std::string variant;  // "free", "constrained" or "hybrid"
  double direct = 0.0;
  double neighbor = 0.0;
  double largest = 0.0;
  bool perfect = false;
  int iterations = 0;
  double seconds = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline const std::vector<std::string> kReportColumns = {"image",   "type",       "variant", "direct", "neighbor",
                                                        "largest", "perfect", "iterations", "seconds"};

std::string report_csv(std::span<const ReportRow> rows);
std::vector<ReportRow> parse_report_csv(const std::string& text);
std::string report_json(std::span<const ReportRow> rows);

}  // namespace lpjigsaw
