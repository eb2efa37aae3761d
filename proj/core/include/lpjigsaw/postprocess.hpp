#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lpjigsaw/assembly.hpp"
#include "lpjigsaw/compat.hpp"
#include "lpjigsaw/core.hpp"

namespace lpjigsaw {

// Solver pieces laid out on integer cells, keyed by (row, col), plus the
// solver pieces that lost a cell. Coordinates may be negative or far apart.
struct SparseGrid {
  std::map<std::pair<int, int>, int> cells;
  std::vector<int> unplaced;
};

// Lays every component out at round(mean(x - dx)), round(mean(y - dy)).
// Components go in order of size (larger first, ties to the lower smallest
// member id); a piece landing on an occupied cell is unplaced. With rotation
// replicas, a physical piece already claimed by an earlier component is
// dropped from later ones.
SparseGrid snap_to_grid(const Placement& placement, std::span<const Component> components,
                        const PieceCatalog& catalog);

struct Window {
  int top = 0;
  int left = 0;
  int rows = 0;
  int cols = 0;
  int count = 0;  // placed pieces inside
  friend bool operator==(const Window&, const Window&) = default;
};

// The rows x cols window covering the most placed cells; ties go to the
// smallest top, then the smallest left.
Window best_window(const SparseGrid& grid, int rows, int cols);

// Keeps the pieces inside the best window and fills its holes greedily from
// the remaining physical pieces: among the holes with the most placed
// neighbors, the (hole, piece, rotation) with the smallest summed distance to
// those neighbors goes first; ties to the row-major first hole, the lower
// physical id, then the lower rotation. With rotation replicas and a
// non-square puzzle the transposed window is also tried, and a winning
// transposed arrangement is turned a quarter counter-clockwise.
// Throws InconsistencyError if the pool runs out.
Assembly trim_and_fill(const SparseGrid& grid, const DistanceTable& table, const PuzzleSpec& spec,
                       const PieceCatalog& catalog);

// snap_to_grid followed by trim_and_fill on a finished solver state.
Assembly complete_assembly(const SolverState& state, const PreparedPuzzle& puzzle);

// {"rows", "cols", "cells": [[{"piece_id", "rotation", "source"} | null, ...], ...]}
std::string assembly_to_json(const Assembly& assembly);
Assembly assembly_from_json(const std::string& text);

}  // namespace lpjigsaw
