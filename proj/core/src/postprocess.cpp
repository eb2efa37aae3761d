#include "lpjigsaw/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <optional>
#include <set>

#include "lpjigsaw/errors.hpp"

namespace lpjigsaw {

SparseGrid snap_to_grid(const Placement& placement, std::span<const Component> components,
                        const PieceCatalog& catalog) {
  std::vector<const Component*> order;
  for (const auto& c : components) {
    if (!c.members.empty()) order.push_back(&c);
  }
  std::stable_sort(order.begin(), order.end(), [](const Component* a, const Component* b) {
    if (a->size() != b->size()) return a->size() > b->size();
    return a->members.front().piece < b->members.front().piece;
  });

  SparseGrid grid;
  std::vector<char> claimed(static_cast<std::size_t>(catalog.physical_count), 0);
  for (const Component* c : order) {
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& m : c->members) {
      sx += placement.x[static_cast<std::size_t>(m.piece)] - m.dx;
      sy += placement.y[static_cast<std::size_t>(m.piece)] - m.dy;
    }
    const auto ox = static_cast<int>(std::lround(sx / c->size()));
    const auto oy = static_cast<int>(std::lround(sy / c->size()));
    std::vector<int> newly_claimed;
    for (const auto& m : c->members) {
      const auto phys = static_cast<std::size_t>(catalog.physical(m.piece));
      if (claimed[phys]) continue;
      newly_claimed.push_back(static_cast<int>(phys));
      const auto [it, inserted] = grid.cells.emplace(std::pair{oy + m.dy, ox + m.dx}, m.piece);
      if (!inserted) grid.unplaced.push_back(m.piece);
    }
    if (catalog.replicas_per_piece > 1) {
      for (int p : newly_claimed) claimed[static_cast<std::size_t>(p)] = 1;
    }
  }
  return grid;
}

// The topmost optimal window has a placed cell on its bottom row, and for a
// fixed top the leftmost one has a placed cell on its right column, so only
// those candidates are scanned.
Window best_window(const SparseGrid& grid, int rows, int cols) {
  Window best{0, 0, rows, cols, 0};
  if (grid.cells.empty()) return best;
  std::set<int> tops;
  for (const auto& [cell, piece] : grid.cells) tops.insert(cell.first - rows + 1);
  bool found = false;
  std::vector<int> band;
  for (int top : tops) {
    band.clear();
    for (const auto& [cell, piece] : grid.cells) {
      if (cell.first >= top && cell.first < top + rows) band.push_back(cell.second);
    }
    std::sort(band.begin(), band.end());
    // For left = c - cols + 1 the window is [left, c]; count members in it.
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < band.size(); ++hi) {
      if (hi + 1 < band.size() && band[hi + 1] == band[hi]) continue;
      const int right = band[hi];
      const int left = right - cols + 1;
      while (band[lo] < left) ++lo;
      const int count = static_cast<int>(hi - lo + 1);
      if (!found || count > best.count) {
        best = {top, left, rows, cols, count};
        found = true;
      }
    }
  }
  return best;
}

namespace {

struct Candidate {
  double score = std::numeric_limits<double>::infinity();
  int physical = -1;
  int rotation = 0;
  bool valid = false;
};

constexpr int kNeighborDr[4] = {-1, 0, 1, 0};
constexpr int kNeighborDc[4] = {0, 1, 0, -1};

// Window contents as solver ids (-1 for a hole), filled in place.
class Filler {
 public:
  Filler(int rows, int cols, std::vector<int> cells, const DistanceTable& table, const PieceCatalog& catalog)
      : rows_(rows), cols_(cols), cells_(std::move(cells)), table_(table), catalog_(catalog) {
    std::vector<char> used(static_cast<std::size_t>(catalog.physical_count), 0);
    for (int id : cells_) {
      if (id >= 0) used[static_cast<std::size_t>(catalog.physical(id))] = 1;
    }
    for (int p = 0; p < catalog.physical_count; ++p) {
      if (!used[static_cast<std::size_t>(p)]) pool_.insert(p);
    }
    cache_.resize(cells_.size());
  }

  std::vector<int> filled_cells;  // row-major indices of fill-placed cells

  const std::vector<int>& run() {
    std::vector<int> holes;
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      if (cells_[k] < 0) holes.push_back(static_cast<int>(k));
    }
    while (!holes.empty()) {
      if (pool_.empty()) throw InconsistencyError("unplaced pool cannot fill the remaining holes");
      int most = -1;
      for (int h : holes) most = std::max(most, placed_neighbors(h));
      int pick = -1;
      for (int h : holes) {
        if (placed_neighbors(h) != most) continue;
        Candidate& c = cache_[static_cast<std::size_t>(h)];
        if (!c.valid) c = evaluate(h);
        if (pick < 0 || c.score < cache_[static_cast<std::size_t>(pick)].score) pick = h;
      }
      const Candidate chosen = cache_[static_cast<std::size_t>(pick)];
      cells_[static_cast<std::size_t>(pick)] = catalog_.replica(chosen.physical, chosen.rotation);
      filled_cells.push_back(pick);
      pool_.erase(chosen.physical);
      holes.erase(std::find(holes.begin(), holes.end(), pick));
      for (int h : holes) {
        Candidate& c = cache_[static_cast<std::size_t>(h)];
        if (c.physical == chosen.physical || adjacent(h, pick)) c.valid = false;
      }
    }
    return cells_;
  }

 private:
  bool adjacent(int a, int b) const {
    const int ra = a / cols_, ca = a % cols_, rb = b / cols_, cb = b % cols_;
    return std::abs(ra - rb) + std::abs(ca - cb) == 1;
  }

  int neighbor(int cell, int dir) const {
    const int r = cell / cols_ + kNeighborDr[dir];
    const int c = cell % cols_ + kNeighborDc[dir];
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_) return -1;
    return cells_[static_cast<std::size_t>(r * cols_ + c)];
  }

  int placed_neighbors(int cell) const {
    int count = 0;
    for (int d = 0; d < 4; ++d) count += neighbor(cell, d) >= 0 ? 1 : 0;
    return count;
  }

  // Direction index d matches orientation label d + 1 (up, right, down, left).
  Candidate evaluate(int cell) const {
    Candidate best;
    for (int p : pool_) {
      for (int r = 0; r < catalog_.replicas_per_piece; ++r) {
        const int id = catalog_.replica(p, r);
        double score = 0.0;
        for (int d = 0; d < 4; ++d) {
          const int q = neighbor(cell, d);
          if (q >= 0) score += table_.at(id, q, orientation_from_index(d));
        }
        if (score < best.score || best.physical < 0) best = {score, p, r, true};
      }
    }
    return best;
  }

  int rows_;
  int cols_;
  std::vector<int> cells_;
  const DistanceTable& table_;
  const PieceCatalog& catalog_;
  std::set<int> pool_;
  std::vector<Candidate> cache_;
};

}  // namespace

Assembly trim_and_fill(const SparseGrid& grid, const DistanceTable& table, const PuzzleSpec& spec,
                       const PieceCatalog& catalog) {
  Window window = best_window(grid, spec.rows, spec.cols);
  bool transposed = false;
  if (catalog.replicas_per_piece > 1 && spec.rows != spec.cols) {
    const Window other = best_window(grid, spec.cols, spec.rows);
    if (other.count > window.count) {
      window = other;
      transposed = true;
    }
  }
  const int h = window.rows;
  const int w = window.cols;
  std::vector<int> cells(static_cast<std::size_t>(h * w), -1);
  for (const auto& [cell, id] : grid.cells) {
    const int r = cell.first - window.top;
    const int c = cell.second - window.left;
    if (r >= 0 && r < h && c >= 0 && c < w) cells[static_cast<std::size_t>(r * w + c)] = id;
  }
  Filler filler(h, w, cells, table, catalog);
  const std::vector<int> full = filler.run();
  std::vector<char> filled(full.size(), 0);
  for (int k : filler.filled_cells) filled[static_cast<std::size_t>(k)] = 1;

  Assembly out(spec.rows, spec.cols);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto k = static_cast<std::size_t>(r * w + c);
      const int id = full[k];
      PlacedPiece placed{catalog.physical(id), catalog.rotation(id)};
      // A quarter turn counter-clockwise sends (r, c) of an h x w grid to (w - 1 - c, r).
      int orow = r;
      int ocol = c;
      if (transposed) {
        orow = w - 1 - c;
        ocol = r;
        placed.quarter_turns = (placed.quarter_turns + 1) % 4;
      }
      out.at(orow, ocol) = placed;
      out.source_at(orow, ocol) = filled[k] ? CellSource::kFillPlaced : CellSource::kLpPlaced;
    }
  }
  return out;
}

Assembly complete_assembly(const SolverState& state, const PreparedPuzzle& puzzle) {
  const SparseGrid grid = snap_to_grid(state.placement, state.components, puzzle.catalog);
  return trim_and_fill(grid, puzzle.table, puzzle.spec, puzzle.catalog);
}

namespace {

const char* source_name(CellSource s) {
  switch (s) {
    case CellSource::kLpPlaced:
      return "lp";
    case CellSource::kFillPlaced:
      return "fill";
    case CellSource::kEmpty:
      return "empty";
  }
  return "empty";
}

CellSource source_from_name(const std::string& s) {
  if (s == "lp") return CellSource::kLpPlaced;
  if (s == "fill") return CellSource::kFillPlaced;
  if (s == "empty") return CellSource::kEmpty;
  throw DataError("unknown cell source '" + s + "'");
}

}  // namespace

std::string assembly_to_json(const Assembly& assembly) {
  nlohmann::json j;
  j["rows"] = assembly.rows;
  j["cols"] = assembly.cols;
  auto& grid = j["cells"] = nlohmann::json::array();
  for (int r = 0; r < assembly.rows; ++r) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < assembly.cols; ++c) {
      const auto& cell = assembly.at(r, c);
      if (!cell) {
        row.push_back(nullptr);
      } else {
        row.push_back({{"piece_id", cell->piece_id},
                       {"rotation", cell->quarter_turns * 90},
                       {"source", source_name(assembly.source_at(r, c))}});
      }
    }
    grid.push_back(std::move(row));
  }
  return j.dump(1);
}

Assembly assembly_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Assembly out(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& grid = j.at("cells");
    if (static_cast<int>(grid.size()) != out.rows) throw DataError("assembly row count mismatch");
    for (int r = 0; r < out.rows; ++r) {
      const auto& row = grid[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != out.cols) throw DataError("assembly column count mismatch");
      for (int c = 0; c < out.cols; ++c) {
        const auto& cell = row[static_cast<std::size_t>(c)];
        if (cell.is_null()) continue;
        const int deg = cell.at("rotation").get<int>();
        if (deg % 90 != 0) throw DataError("rotation must be a multiple of 90 degrees");
        out.at(r, c) = PlacedPiece{cell.at("piece_id").get<int>(), ((deg / 90) % 4 + 4) % 4};
        out.source_at(r, c) = source_from_name(cell.value("source", std::string("lp")));
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed assembly JSON: ") + e.what());
  }
}

}  // namespace lpjigsaw
