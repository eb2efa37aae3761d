#include "lpjigsaw/core.hpp"

#include <unordered_set>

#include "lpjigsaw/errors.hpp"

namespace lpjigsaw {

void PuzzleSpec::validate() const {
  if (rows < 1 || cols < 1) throw DimensionError("puzzle needs at least one row and one column");
  if (piece_px < 2) throw DimensionError("piece_px must be at least 2");
}

Piece rotate_piece(const Piece& piece, int quarter_turns) {
  Piece out;
  out.id = piece.id;
  out.pixels = rotate_ccw(piece.pixels, quarter_turns);
  out.quarter_turns = (((piece.quarter_turns + quarter_turns) % 4) + 4) % 4;
  return out;
}

Assembly::Assembly(int rows_, int cols_)
    : rows(rows_),
      cols(cols_),
      cells(static_cast<std::size_t>(rows_ * cols_)),
      source(static_cast<std::size_t>(rows_ * cols_), CellSource::kEmpty) {}

bool Assembly::complete() const {
  for (const auto& cell : cells) {
    if (!cell) return false;
  }
  return true;
}

bool Assembly::duplicate_free() const {
  std::unordered_set<int> seen;
  for (const auto& cell : cells) {
    if (cell && !seen.insert(cell->piece_id).second) return false;
  }
  return true;
}

Image render(const Assembly& assembly, const std::vector<Piece>& pieces, int piece_px) {
  Image out(assembly.cols * piece_px, assembly.rows * piece_px);
  for (int r = 0; r < assembly.rows; ++r) {
    for (int c = 0; c < assembly.cols; ++c) {
      const auto& cell = assembly.at(r, c);
      if (!cell) continue;
      const auto& piece = pieces.at(static_cast<std::size_t>(cell->piece_id));
      out.paste(rotate_ccw(piece.pixels, cell->quarter_turns), r * piece_px, c * piece_px);
    }
  }
  return out;
}

}  // namespace lpjigsaw
