#include "lpjigsaw/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "lpjigsaw/errors.hpp"

namespace lpjigsaw {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFree:
      return "free";
    case Variant::kConstrained:
      return "constrained";
    case Variant::kHybrid:
      return "hybrid";
  }
  return "hybrid";
}

Variant variant_from_string(const std::string& text) {
  if (text == "free") return Variant::kFree;
  if (text == "constrained") return Variant::kConstrained;
  if (text == "hybrid") return Variant::kHybrid;
  throw DataError("unknown variant '" + text + "'");
}

void VariantConfig::validate() const {
  if (!(reject_tol > 0.0)) throw InconsistencyError("reject_tol must be positive");
  if (max_iters < 1) throw InconsistencyError("max_iters must be at least 1");
  if (!std::isfinite(type2_anchor_coord)) throw InconsistencyError("type2_anchor_coord must be finite");
}

std::vector<int> PieceCatalog::physical_ids() const {
  std::vector<int> ids(static_cast<std::size_t>(size()));
  for (int k = 0; k < size(); ++k) ids[static_cast<std::size_t>(k)] = physical(k);
  return ids;
}

PreparedPuzzle prepare(const PuzzleBundle& bundle, std::optional<DistanceTable> table, unsigned threads) {
  bundle.spec.validate();
  PreparedPuzzle out;
  out.type = bundle.type;
  out.spec = bundle.spec;
  const int n = static_cast<int>(bundle.pieces.size());
  if (n != bundle.spec.piece_count()) throw DataError("piece count does not match the puzzle spec");
  if (bundle.type == PuzzleType::kType1) {
    out.catalog = {n, 1};
    out.pieces = bundle.pieces;
  } else {
    out.catalog = {n, 4};
    out.pieces.reserve(static_cast<std::size_t>(4 * n));
    for (int p = 0; p < n; ++p) {
      for (int r = 0; r < 4; ++r) {
        Piece replica = rotate_piece(bundle.pieces[static_cast<std::size_t>(p)], r);
        replica.id = out.catalog.replica(p, r);
        out.pieces.push_back(std::move(replica));
      }
    }
  }
  if (table) {
    if (table->size() != out.catalog.size() || table->piece_px() != bundle.spec.piece_px) {
      throw DataError("cached distance table does not match the bundle");
    }
    out.table = std::move(*table);
  } else {
    out.table = build_distance_table(out.pieces, threads);
  }
  return out;
}

PlacementProblem axis_problem(std::span<const OrientedMatch> active, int piece_count, bool y_axis) {
  PlacementProblem p;
  p.var_count = piece_count;
  p.terms.reserve(active.size());
  for (const auto& m : active) {
    const Offset off = offsets(m.o);
    p.terms.push_back({m.i, m.j, y_axis ? off.dy : off.dx, m.weight});
  }
  return p;
}

namespace {

double residual(const OrientedMatch& m, const std::vector<double>& coord, int delta) {
  return std::abs(coord[static_cast<std::size_t>(m.i)] - coord[static_cast<std::size_t>(m.j)] -
                  static_cast<double>(delta));
}

bool consistent(const OrientedMatch& m, const Placement& placement, double tol) {
  const Offset off = offsets(m.o);
  return residual(m, placement.x, off.dx) <= tol && residual(m, placement.y, off.dy) <= tol;
}

}  // namespace

std::vector<MatchKey> reject_matches(std::span<const OrientedMatch> active, const Placement& placement, double tol) {
  std::vector<MatchKey> out;
  for (const auto& m : active) {
    if (!consistent(m, placement, tol)) out.push_back(m.key());
  }
  return out;
}

double l0_cost(std::span<const OrientedMatch> matches, const Placement& placement, double tol) {
  double total = 0.0;
  for (const auto& m : matches) {
    const Offset off = offsets(m.o);
    if (residual(m, placement.x, off.dx) > tol) total += m.weight;
    if (residual(m, placement.y, off.dy) > tol) total += m.weight;
  }
  return total;
}

namespace {

// Mutable component store used while merging.
class ComponentBuilder {
 public:
  ComponentBuilder(int piece_count, const PieceCatalog& catalog)
      : catalog_(catalog),
        comp_of_(static_cast<std::size_t>(piece_count)),
        x_(static_cast<std::size_t>(piece_count), 0),
        y_(static_cast<std::size_t>(piece_count), 0),
        members_(static_cast<std::size_t>(piece_count)),
        cells_(static_cast<std::size_t>(piece_count)),
        physical_(static_cast<std::size_t>(piece_count)) {
    for (int p = 0; p < piece_count; ++p) {
      const auto k = static_cast<std::size_t>(p);
      comp_of_[k] = p;
      members_[k] = {p};
      cells_[k].insert({0, 0});
      physical_[k].insert(catalog_.physical(p));
    }
  }

  // Moves the singleton `piece` into the component of `target` at (x, y).
  // Lays out seed components; `target` itself is placed first.
  void place_seed(int piece, int target, int x, int y) {
    if (piece == target) {
      reposition_singleton(piece, x, y);
      return;
    }
    const auto from = static_cast<std::size_t>(comp_of_[static_cast<std::size_t>(piece)]);
    members_[from].clear();
    cells_[from].clear();
    physical_[from].clear();
    const auto to = static_cast<std::size_t>(comp_of_[static_cast<std::size_t>(target)]);
    comp_of_[static_cast<std::size_t>(piece)] = static_cast<int>(to);
    x_[static_cast<std::size_t>(piece)] = x;
    y_[static_cast<std::size_t>(piece)] = y;
    members_[to].push_back(piece);
    cells_[to].insert({x, y});
    physical_[to].insert(catalog_.physical(piece));
  }

  // Tries to realize x_i - x_j = dx, y_i - y_j = dy. Returns false when the
  // merge would collide or duplicate a physical piece.
  bool join(int i, int j, int dx, int dy) {
    int ci = comp_of_[static_cast<std::size_t>(i)];
    int cj = comp_of_[static_cast<std::size_t>(j)];
    if (ci == cj) return false;
    // Translation taking cj's frame into ci's frame.
    int tx = x_[static_cast<std::size_t>(i)] - dx - x_[static_cast<std::size_t>(j)];
    int ty = y_[static_cast<std::size_t>(i)] - dy - y_[static_cast<std::size_t>(j)];
    if (members_[static_cast<std::size_t>(cj)].size() > members_[static_cast<std::size_t>(ci)].size()) {
      std::swap(ci, cj);
      tx = -tx;
      ty = -ty;
    }
    const auto big = static_cast<std::size_t>(ci);
    const auto small = static_cast<std::size_t>(cj);
    for (int m : members_[small]) {
      const auto k = static_cast<std::size_t>(m);
      if (cells_[big].contains({x_[k] + tx, y_[k] + ty})) return false;
      if (physical_[big].contains(catalog_.physical(m))) return false;
    }
    for (int m : members_[small]) {
      const auto k = static_cast<std::size_t>(m);
      x_[k] += tx;
      y_[k] += ty;
      comp_of_[k] = ci;
      members_[big].push_back(m);
      cells_[big].insert({x_[k], y_[k]});
      physical_[big].insert(catalog_.physical(m));
    }
    members_[small].clear();
    cells_[small].clear();
    physical_[small].clear();
    return true;
  }

  std::vector<Component> result() const {
    std::vector<Component> out;
    for (const auto& list : members_) {
      if (list.empty()) continue;
      Component c;
      int min_x = x_[static_cast<std::size_t>(list.front())];
      int min_y = y_[static_cast<std::size_t>(list.front())];
      for (int m : list) {
        min_x = std::min(min_x, x_[static_cast<std::size_t>(m)]);
        min_y = std::min(min_y, y_[static_cast<std::size_t>(m)]);
      }
      for (int m : list) {
        c.members.push_back({m, x_[static_cast<std::size_t>(m)] - min_x, y_[static_cast<std::size_t>(m)] - min_y});
      }
      std::sort(c.members.begin(), c.members.end(),
                [](const ComponentMember& a, const ComponentMember& b) { return a.piece < b.piece; });
      out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(),
              [](const Component& a, const Component& b) { return a.members.front().piece < b.members.front().piece; });
    return out;
  }

 private:
  void reposition_singleton(int piece, int x, int y) {
    const auto k = static_cast<std::size_t>(piece);
    const auto c = static_cast<std::size_t>(comp_of_[k]);
    cells_[c].erase({x_[k], y_[k]});
    x_[k] = x;
    y_[k] = y;
    cells_[c].insert({x, y});
  }

  const PieceCatalog& catalog_;
  std::vector<int> comp_of_;
  std::vector<int> x_, y_;
  std::vector<std::vector<int>> members_;
  std::vector<std::set<std::pair<int, int>>> cells_;
  std::vector<std::set<int>> physical_;
};

}  // namespace

std::vector<Component> component_extraction(std::span<const OrientedMatch> active, const Placement& placement,
                                            double tol, const PieceCatalog& catalog,
                                            std::span<const Component> seed) {
  const int n = static_cast<int>(placement.x.size());
  ComponentBuilder builder(n, catalog);
  for (const auto& comp : seed) {
    if (comp.members.empty()) continue;
    const int target = comp.members.front().piece;
    for (const auto& m : comp.members) builder.place_seed(m.piece, target, m.dx, m.dy);
  }

  std::vector<const OrientedMatch*> edges;
  for (const auto& m : active) {
    if (consistent(m, placement, tol)) edges.push_back(&m);
  }
  std::stable_sort(edges.begin(), edges.end(), [](const OrientedMatch* a, const OrientedMatch* b) {
    if (a->weight != b->weight) return a->weight > b->weight;
    return a->key() < b->key();
  });
  for (const auto* e : edges) {
    const Offset off = offsets(e->o);
    builder.join(e->i, e->j, off.dx, off.dy);
  }
  return builder.result();
}

namespace {

std::map<int, AnchorPoint> choose_anchors(std::span<const OrientedMatch> initial, const PieceCatalog& catalog,
                                          const VariantConfig& cfg) {
  if (initial.empty()) return {};
  int piece = initial.front().i;
  if (cfg.anchor_policy == AnchorPolicy::kBestMatch) {
    double best = -1.0;
    for (const auto& m : initial) {
      if (m.weight > best) {
        best = m.weight;
        piece = m.i;
      }
    }
  } else {
    std::vector<double> total(static_cast<std::size_t>(catalog.size()), 0.0);
    for (const auto& m : initial) total[static_cast<std::size_t>(m.i)] += m.weight;
    piece = static_cast<int>(std::max_element(total.begin(), total.end()) - total.begin());
  }
  const int physical = catalog.physical(piece);
  const double a = cfg.type2_anchor_coord;
  const AnchorPoint corners[4] = {{a, a}, {a, -a}, {-a, a}, {-a, -a}};
  std::map<int, AnchorPoint> out;
  for (int r = 0; r < catalog.replicas_per_piece; ++r) out[catalog.replica(physical, r)] = corners[r];
  return out;
}

std::vector<std::vector<GroupMember>> groups_for_axis(std::span<const Component> comps, bool y_axis) {
  std::vector<std::vector<GroupMember>> groups;
  for (const auto& c : comps) {
    if (c.size() < 2) continue;
    auto& g = groups.emplace_back();
    for (const auto& m : c.members) g.push_back({m.piece, y_axis ? m.dy : m.dx});
  }
  return groups;
}

PlacementSolution solve_one_axis(std::span<const OrientedMatch> active, int n,
                                 const std::map<int, AnchorPoint>& anchors, std::span<const Component> fixed,
                                 bool y_axis) {
  PlacementProblem problem = axis_problem(active, n, y_axis);
  for (const auto& [v, point] : anchors) problem.anchors[v] = y_axis ? point.y : point.x;
  const auto groups = groups_for_axis(fixed, y_axis);
  if (groups.empty()) return solve_axis(problem);
  const CollapsedProblem collapsed = collapse(problem, groups);
  return expand(collapsed, solve_axis(collapsed.problem), problem);
}

SolverState run_variant(const PreparedPuzzle& puzzle, const VariantConfig& cfg, Variant mode,
                        const IterationObserver& observer) {
  const int n = puzzle.catalog.size();
  const Universe initial_universe =
      puzzle.catalog.replicas_per_piece == 1 ? Universe::full(n) : Universe::full(puzzle.catalog.physical_ids());

  SolverState st;
  st.variant = mode;
  st.universe = initial_universe;
  st.active = active_set(puzzle.table, st.universe, initial_universe);
  const std::vector<OrientedMatch> initial_active = st.active.matches;
  if (puzzle.catalog.replicas_per_piece > 1) st.anchors = choose_anchors(initial_active, puzzle.catalog, cfg);

  std::vector<Component> fixed;
  for (int k = 0;; ++k) {
    const std::span<const Component> seed =
        mode == Variant::kConstrained ? std::span<const Component>(fixed) : std::span<const Component>();
    const PlacementSolution sx = solve_one_axis(st.active.matches, n, st.anchors, seed, false);
    const PlacementSolution sy = solve_one_axis(st.active.matches, n, st.anchors, seed, true);
    st.placement = {sx.values, sy.values, sx.objective + sy.objective};

    const std::vector<MatchKey> rejected = reject_matches(st.active.matches, st.placement, cfg.reject_tol);
    st.components = component_extraction(st.active.matches, st.placement, cfg.reject_tol, puzzle.catalog, seed);
    st.k = k + 1;

    IterationRecord rec;
    rec.k = k;
    rec.universe_size = st.universe.size();
    rec.active_size = st.active.matches.size();
    rec.rejected_size = rejected.size();
    rec.skipped_slots = st.active.skipped_slots;
    rec.objective_x = sx.objective;
    rec.objective_y = sy.objective;
    for (const auto& c : st.components) {
      if (c.size() >= 2) ++rec.components;
      rec.largest_component = std::max(rec.largest_component, c.size());
    }
    st.history.push_back(rec);
    if (observer) observer({k, &st.universe, &st.active, &rejected, mode, &st.placement, &st.components});

    if (mode == Variant::kConstrained) fixed = st.components;
    if (rejected.empty()) {
      st.converged = true;
      break;
    }
    if (k + 1 >= cfg.max_iters) break;
    for (const auto& key : rejected) st.universe.remove(key);
    st.active = active_set(puzzle.table, st.universe,
                           cfg.weights_from_initial_universe ? initial_universe : st.universe);
  }
  st.l0_cost = l0_cost(initial_active, st.placement, cfg.reject_tol);
  return st;
}

}  // namespace

SolverState solve(const PreparedPuzzle& puzzle, const VariantConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  if (cfg.mode != Variant::kHybrid) return run_variant(puzzle, cfg, cfg.mode, observer);
  SolverState free_state = run_variant(puzzle, cfg, Variant::kFree, observer);
  SolverState constrained_state = run_variant(puzzle, cfg, Variant::kConstrained, observer);
  const double free_cost = free_state.l0_cost;
  const double constrained_cost = constrained_state.l0_cost;
  SolverState out = free_cost < constrained_cost ? std::move(free_state) : std::move(constrained_state);
  out.free_cost = free_cost;
  out.constrained_cost = constrained_cost;
  return out;
}

SolverState solve_type1(const PuzzleBundle& bundle, const VariantConfig& cfg) {
  if (bundle.type != PuzzleType::kType1) throw DataError("bundle is not a Type 1 puzzle");
  return solve(prepare(bundle), cfg);
}

SolverState solve_type2(const PuzzleBundle& bundle, const VariantConfig& cfg) {
  if (bundle.type != PuzzleType::kType2) throw DataError("bundle is not a Type 2 puzzle");
  return solve(prepare(bundle), cfg);
}

std::string trace_jsonl(const SolverState& state) {
  std::ostringstream out;
  for (const auto& r : state.history) {
    const nlohmann::json j = {{"k", r.k},
                              {"U", r.universe_size},
                              {"A", r.active_size},
                              {"R", r.rejected_size},
                              {"objective_x", r.objective_x},
                              {"objective_y", r.objective_y},
                              {"components", r.components},
                              {"largest_component", r.largest_component},
                              {"skipped_slots", r.skipped_slots}};
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace lpjigsaw
