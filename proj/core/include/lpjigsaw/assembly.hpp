#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpjigsaw/compat.hpp"
#include "lpjigsaw/core.hpp"
#include "lpjigsaw/ingest.hpp"
#include "lpjigsaw/lpsolve.hpp"

namespace lpjigsaw {

enum class Variant { kFree, kConstrained, kHybrid };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& text);

// How the Type-2 anchor piece is chosen from the initial active set.
enum class AnchorPolicy {
  kBestMatch,      // a piece of the single highest-weight match
  kBestAggregate,  // the piece with the largest summed weight over its matches
};

struct VariantConfig {
  Variant mode = Variant::kHybrid;
  int max_iters = 10;
  double reject_tol = 1e-5;
  double type2_anchor_coord = 1e4;
  // Weights from U^(0) for every iteration instead of the current universe.
  bool weights_from_initial_universe = false;
  AnchorPolicy anchor_policy = AnchorPolicy::kBestMatch;

  // Throws InconsistencyError unless reject_tol > 0 and max_iters >= 1.
  void validate() const;
};

// Maps solver piece ids to physical pieces. Type 1 uses the identity; Type 2
// uses four rotation replicas per physical piece, replica = 4 * physical + r.
struct PieceCatalog {
  int physical_count = 0;
  int replicas_per_piece = 1;

  int size() const { return physical_count * replicas_per_piece; }
  int physical(int id) const { return id / replicas_per_piece; }
  int rotation(int id) const { return id % replicas_per_piece; }
  int replica(int physical_id, int rotation) const { return physical_id * replicas_per_piece + rotation; }
  std::vector<int> physical_ids() const;
};

// Pieces fused at fixed integer offsets. Offsets are in grid units, with the
// smallest x and y offsets at 0. Members are ordered by piece id.
struct ComponentMember {
  int piece = 0;
  int dx = 0;
  int dy = 0;
  friend bool operator==(const ComponentMember&, const ComponentMember&) = default;
};

struct Component {
  std::vector<ComponentMember> members;

  int size() const { return static_cast<int>(members.size()); }
  friend bool operator==(const Component&, const Component&) = default;
};

struct AnchorPoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const AnchorPoint&, const AnchorPoint&) = default;
};

// Everything the loop needs about one puzzle, independent of the variant.
struct PreparedPuzzle {
  PuzzleType type = PuzzleType::kType1;
  PuzzleSpec spec;
  PieceCatalog catalog;
  std::vector<Piece> pieces;  // solver pieces: originals or rotation replicas
  DistanceTable table;        // over the solver pieces
};

// Builds the solver pieces and, unless `table` is supplied, their distance
// table. A supplied table must match the solver piece count and size.
PreparedPuzzle prepare(const PuzzleBundle& bundle, std::optional<DistanceTable> table = std::nullopt,
                       unsigned threads = 0);

struct IterationRecord {
  int k = 0;
  std::size_t universe_size = 0;
  std::size_t active_size = 0;
  std::size_t rejected_size = 0;
  int skipped_slots = 0;
  double objective_x = 0.0;
  double objective_y = 0.0;
  int components = 0;  // components with at least two pieces
  int largest_component = 0;
};

struct SolverState {
  Variant variant = Variant::kFree;  // the variant that produced this state
  int k = 0;                         // LP rounds solved
  bool converged = false;            // last round had no rejections
  Universe universe;
  ActiveSet active;
  Placement placement;
  std::vector<Component> components;  // every piece, singletons included
  std::vector<IterationRecord> history;
  std::map<int, AnchorPoint> anchors;  // Type 2: pinned replicas
  // Weighted L0 cost of the final placement over the initial active set,
  // counting terms whose residual exceeds reject_tol, per axis summed.
  double l0_cost = 0.0;
  // Hybrid bookkeeping; both set only when the hybrid ran.
  std::optional<double> free_cost;
  std::optional<double> constrained_cost;
};

// Called after every LP round with that round's inputs and results; the
// rejected keys have not yet been removed from the universe.
struct IterationView {
  int k = 0;
  const Universe* universe = nullptr;
  const ActiveSet* active = nullptr;
  const std::vector<MatchKey>* rejected = nullptr;
  Variant variant = Variant::kFree;
  const Placement* placement = nullptr;
  const std::vector<Component>* components = nullptr;
};
using IterationObserver = std::function<void(const IterationView&)>;

// Active matches whose x or y residual exceeds `tol`.
std::vector<MatchKey> reject_matches(std::span<const OrientedMatch> active, const Placement& placement, double tol);

// Groups pieces joined by residual-consistent matches. Matches are merged
// greedily by descending weight; a merge is refused when it would place two
// pieces on one cell or two replicas of one physical piece in one component.
// `seed` components are fused first and never split.
std::vector<Component> component_extraction(std::span<const OrientedMatch> active, const Placement& placement,
                                            double tol, const PieceCatalog& catalog,
                                            std::span<const Component> seed = {});

// The x (or y) axis problem of an active set, one variable per solver piece.
PlacementProblem axis_problem(std::span<const OrientedMatch> active, int piece_count, bool y_axis);

// Weighted L0 cost of `placement` over `matches`.
double l0_cost(std::span<const OrientedMatch> matches, const Placement& placement, double tol);

SolverState solve(const PreparedPuzzle& puzzle, const VariantConfig& cfg, const IterationObserver& observer = {});

// Convenience wrappers that check the bundle's type tag (DataError on mismatch).
SolverState solve_type1(const PuzzleBundle& bundle, const VariantConfig& cfg);
SolverState solve_type2(const PuzzleBundle& bundle, const VariantConfig& cfg);

// One JSON object per line, one line per history record.
std::string trace_jsonl(const SolverState& state);

}  // namespace lpjigsaw
