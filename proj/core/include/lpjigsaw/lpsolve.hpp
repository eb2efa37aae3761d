#pragma once

#include <map>
#include <string>
#include <vector>

namespace lpjigsaw {

// One weighted L1 term  weight * |x_u - x_v - delta|.
struct PlacementTerm {
  int u = 0;
  int v = 0;
  int delta = 0;
  double weight = 1.0;
};

// Single-axis placement problem: minimize the sum of the terms, with some
// variables pinned to fixed values.
struct PlacementProblem {
  int var_count = 0;
  std::vector<PlacementTerm> terms;
  std::map<int, double> anchors;

  // Throws InconsistencyError on out-of-range indices, u == v, or a
  // non-positive weight.
  void validate() const;
};

struct PlacementSolution {
  std::vector<double> values;
  double objective = 0.0;
  std::vector<double> residuals;  // |x_u - x_v - delta| per term
};

// Sum of weight * |x_u - x_v - delta| at `values`.
double evaluate_objective(const PlacementProblem& problem, const std::vector<double>& values);

// Exact solver: primal network simplex on the min-cost-flow dual of the
// problem. Returns a vertex optimum in which every term-connected group of
// unanchored variables has its minimum shifted to 0. Deterministic.
PlacementSolution solve_axis(const PlacementProblem& problem);

// Independent dense tableau simplex over the auxiliary-variable form,
// started from the slack basis. Limited to desk-scale problems; throws SizeLimitError beyond
// kOracleMaxVars variables or kOracleMaxTerms terms.
inline constexpr int kOracleMaxVars = 200;
inline constexpr int kOracleMaxTerms = 1000;
PlacementSolution oracle_solve(const PlacementProblem& problem);

struct GroupMember {
  int var = 0;
  int offset = 0;  // x_var = X_group + offset
};

// A problem over one variable per group. Terms internal to a group with a
// non-zero residual are kept as a constant cost.
struct CollapsedProblem {
  PlacementProblem problem;
  std::vector<int> group_of;   // original var -> group
  std::vector<int> offset_of;  // original var -> offset within its group
  double constant_cost = 0.0;
};

// Variables not mentioned in `groups` become singleton groups. Throws
// InconsistencyError if a variable is listed twice or if anchors inside a
// group disagree with the offsets.
CollapsedProblem collapse(const PlacementProblem& problem,
                          const std::vector<std::vector<GroupMember>>& groups);

// Maps a solution of the collapsed problem back to the original variables,
// with objective and residuals evaluated on `original`.
PlacementSolution expand(const CollapsedProblem& collapsed, const PlacementSolution& solution,
                         const PlacementProblem& original);

// JSON record of a problem and (optionally) its solution for failure triage.
std::string debug_dump(const PlacementProblem& problem, const PlacementSolution* solution = nullptr);

}  // namespace lpjigsaw
