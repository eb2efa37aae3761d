#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lpjigsaw/image.hpp"

namespace lpjigsaw {

// Puzzle geometry: `rows` x `cols` square pieces of `piece_px` pixels.
struct PuzzleSpec {
  int rows = 0;
  int cols = 0;
  int piece_px = 0;

  int piece_count() const { return rows * cols; }
  // Throws DimensionError unless rows, cols >= 1 and piece_px >= 2.
  void validate() const;

  friend bool operator==(const PuzzleSpec&, const PuzzleSpec&) = default;
};

// Relative configuration of an oriented pair (i, j, o), named by where j
// sits relative to i. Numeric values are the orientation labels 1..4.
enum class Orientation : int {
  kUp = 1,     // j directly above i
  kRight = 2,  // j directly right of i
  kDown = 3,   // j directly below i
  kLeft = 4,   // j directly left of i
};

inline constexpr std::array<Orientation, 4> kOrientations = {
    Orientation::kUp, Orientation::kRight, Orientation::kDown, Orientation::kLeft};

constexpr int orientation_index(Orientation o) { return static_cast<int>(o) - 1; }
constexpr Orientation orientation_from_index(int index) {
  return static_cast<Orientation>(index + 1);
}
// The label of the same physical adjacency seen from j: (i,j,o) ~ (j,i,opposite(o)).
constexpr Orientation opposite(Orientation o) {
  return orientation_from_index((orientation_index(o) + 2) % 4);
}

// Desired offsets (x_i - x_j, y_i - y_j) for an oriented pair. x grows to the
// right, y grows downward.
struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

constexpr Offset offsets(Orientation o) {
  switch (o) {
    case Orientation::kUp:
      return {0, 1};
    case Orientation::kRight:
      return {-1, 0};
    case Orientation::kDown:
      return {0, -1};
    case Orientation::kLeft:
      return {1, 0};
  }
  return {0, 0};
}

// A square piece. `quarter_turns` counts counter-clockwise rotations applied
// to the stored pixels relative to how the piece was handed to the solver.
struct Piece {
  int id = 0;
  Image pixels;
  int quarter_turns = 0;

  int size() const { return pixels.width(); }
  friend bool operator==(const Piece&, const Piece&) = default;
};

// Counter-clockwise by 90 degrees per quarter turn; updates the rotation tag
// modulo 4.
Piece rotate_piece(const Piece& piece, int quarter_turns);

// Real-valued LP coordinates, one per piece, in grid units.
struct Placement {
  std::vector<double> x;
  std::vector<double> y;
  double objective = 0.0;
};

enum class CellSource { kEmpty, kLpPlaced, kFillPlaced };

struct PlacedPiece {
  int piece_id = 0;
  int quarter_turns = 0;
};

// Final rectangular arrangement. Cells are row-major.
struct Assembly {
  int rows = 0;
  int cols = 0;
  std::vector<std::optional<PlacedPiece>> cells;
  std::vector<CellSource> source;

  Assembly() = default;
  Assembly(int rows, int cols);

  std::optional<PlacedPiece>& at(int row, int col) {
    return cells[static_cast<std::size_t>(row * cols + col)];
  }
  const std::optional<PlacedPiece>& at(int row, int col) const {
    return cells[static_cast<std::size_t>(row * cols + col)];
  }
  CellSource& source_at(int row, int col) {
    return source[static_cast<std::size_t>(row * cols + col)];
  }
  CellSource source_at(int row, int col) const {
    return source[static_cast<std::size_t>(row * cols + col)];
  }

  bool complete() const;
  // True when no piece id appears twice.
  bool duplicate_free() const;
};

// Stitches placed pieces (rotated by their quarter turns) into one image.
// Empty cells stay black.
Image render(const Assembly& assembly, const std::vector<Piece>& pieces, int piece_px);

}  // namespace lpjigsaw
