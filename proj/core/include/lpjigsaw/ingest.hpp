#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpjigsaw/core.hpp"

namespace lpjigsaw {

enum class PuzzleType { kType1, kType2 };

std::string to_string(PuzzleType type);
PuzzleType puzzle_type_from_string(const std::string& text);

// Where a scrambled piece came from, and the counter-clockwise quarter turns
// that were applied to it when it was scrambled.
struct TruthEntry {
  int row = 0;
  int col = 0;
  int quarter_turns = 0;
  friend bool operator==(const TruthEntry&, const TruthEntry&) = default;
};

// Indexed by piece id.
using GroundTruth = std::vector<TruthEntry>;

struct PuzzleBundle {
  PuzzleSpec spec;
  std::vector<Piece> pieces;  // scrambled order; pieces[k].id == k
  std::optional<GroundTruth> truth;
  PuzzleType type = PuzzleType::kType1;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
};

// Cuts `image` into piece_px squares and shuffles them with `seed`.
// Throws DimensionError unless both image sides are multiples of piece_px.
PuzzleBundle slice(const Image& image, int piece_px, std::uint64_t seed);

// Largest centered sub-image whose sides are multiples of piece_px.
Image center_crop(const Image& image, int piece_px);

// Rotates every piece of a Type-1 bundle by a uniformly drawn quarter turn.
PuzzleBundle scramble_type2(const PuzzleBundle& bundle, std::uint64_t seed);

// Same, with the per-piece quarter turns given explicitly.
PuzzleBundle apply_rotations(const PuzzleBundle& bundle, std::span<const int> quarter_turns);

// Adds i.i.d. Gaussian noise of standard deviation `sigma` (16-bit scale) to
// every channel sample, then clamps to [0, 65535] and rounds.
PuzzleBundle add_noise(const PuzzleBundle& bundle, double sigma, std::uint64_t seed);

// Places each piece back at its true cell, undoing its scramble rotation.
Image reassemble_from_truth(const PuzzleBundle& bundle);

// Bundle directory layout: manifest.json, piece_<id>.png, optional truth.json.
void save_bundle(const PuzzleBundle& bundle, const std::filesystem::path& dir);
// Never touches truth.json.
PuzzleBundle load_bundle(const std::filesystem::path& dir);
GroundTruth load_truth(const std::filesystem::path& dir);

}  // namespace lpjigsaw
