#include "lpjigsaw/lpsolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "lpjigsaw/errors.hpp"
#include "network_simplex.hpp"

namespace lpjigsaw {

namespace {

std::string term_label(std::size_t t) { return "term " + std::to_string(t); }

// Union-find over variables joined by terms.
class Components {
 public:
  explicit Components(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int v) {
    while (parent_[static_cast<std::size_t>(v)] != v) {
      parent_[static_cast<std::size_t>(v)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(v)])];
      v = parent_[static_cast<std::size_t>(v)];
    }
    return v;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

// Shifts every term-connected component without an anchor so that its
// minimum is 0. Anchored components are left in place.
void normalize(const PlacementProblem& problem, std::vector<double>& values) {
  Components comps(problem.var_count);
  for (const auto& t : problem.terms) comps.unite(t.u, t.v);
  const auto n = static_cast<std::size_t>(problem.var_count);
  std::vector<char> anchored(n, 0);
  for (const auto& [v, value] : problem.anchors) anchored[static_cast<std::size_t>(comps.find(v))] = 1;
  std::vector<double> lowest(n, std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < n; ++v) {
    const auto r = static_cast<std::size_t>(comps.find(static_cast<int>(v)));
    lowest[r] = std::min(lowest[r], values[v]);
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto r = static_cast<std::size_t>(comps.find(static_cast<int>(v)));
    if (!anchored[r]) values[v] -= lowest[r];
  }
}

PlacementSolution finish(const PlacementProblem& problem, std::vector<double> values) {
  for (const auto& [v, value] : problem.anchors) values[static_cast<std::size_t>(v)] = value;
  normalize(problem, values);
  PlacementSolution out;
  out.residuals.reserve(problem.terms.size());
  for (const auto& t : problem.terms) {
    out.residuals.push_back(std::abs(values[static_cast<std::size_t>(t.u)] - values[static_cast<std::size_t>(t.v)] -
                                     static_cast<double>(t.delta)));
  }
  out.objective = evaluate_objective(problem, values);
  out.values = std::move(values);
  return out;
}

}  // namespace

void PlacementProblem::validate() const {
  if (var_count < 0) throw InconsistencyError("negative variable count");
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& t = terms[k];
    if (t.u < 0 || t.u >= var_count || t.v < 0 || t.v >= var_count) {
      throw InconsistencyError(term_label(k) + " refers to a variable out of range");
    }
    if (t.u == t.v) throw InconsistencyError(term_label(k) + " joins a variable to itself");
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
      throw InconsistencyError(term_label(k) + " has a non-positive or non-finite weight");
    }
  }
  for (const auto& [v, value] : anchors) {
    if (v < 0 || v >= var_count) throw InconsistencyError("anchor on a variable out of range");
    if (!std::isfinite(value)) throw InconsistencyError("anchor value is not finite");
  }
}

double evaluate_objective(const PlacementProblem& problem, const std::vector<double>& values) {
  double total = 0.0;
  for (const auto& t : problem.terms) {
    total += t.weight * std::abs(values[static_cast<std::size_t>(t.u)] - values[static_cast<std::size_t>(t.v)] -
                                 static_cast<double>(t.delta));
  }
  return total;
}

// Each term is a pair of opposite arcs of capacity w with costs +c and -c
// between the two free endpoints; anchored endpoints are folded into a
// ground node at 0. All supplies are zero, and x = -potential.
PlacementSolution solve_axis(const PlacementProblem& problem) {
  problem.validate();
  const auto n = static_cast<std::size_t>(problem.var_count);
  std::vector<int> node_of(n, -1);
  int nodes = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!problem.anchors.contains(static_cast<int>(v))) node_of[v] = nodes++;
  }
  const int ground = nodes++;

  detail::NetworkSimplex simplex(nodes);
  for (const auto& t : problem.terms) {
    const auto au = problem.anchors.find(t.u);
    const auto av = problem.anchors.find(t.v);
    const bool u_fixed = au != problem.anchors.end();
    const bool v_fixed = av != problem.anchors.end();
    if (u_fixed && v_fixed) continue;
    double c = static_cast<double>(t.delta);
    if (u_fixed) c -= au->second;
    if (v_fixed) c += av->second;
    const int a = u_fixed ? ground : node_of[static_cast<std::size_t>(t.u)];
    const int b = v_fixed ? ground : node_of[static_cast<std::size_t>(t.v)];
    simplex.add_arc(a, b, c, t.weight);
    simplex.add_arc(b, a, -c, t.weight);
  }
  simplex.solve();

  const double ground_potential = simplex.potential(ground);
  std::vector<double> values(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (node_of[v] >= 0) values[v] = ground_potential - simplex.potential(node_of[v]);
  }
  return finish(problem, std::move(values));
}

// Equality form: x_u - x_v - e+ + e- = c with x = p - q and all columns
// non-negative. Rows with c < 0 are negated so the e columns give an
// identity starting basis. Dantzig pricing with a Bland fallback after a
// run of degenerate pivots.
PlacementSolution oracle_solve(const PlacementProblem& problem) {
  problem.validate();
  if (problem.var_count > kOracleMaxVars || static_cast<int>(problem.terms.size()) > kOracleMaxTerms) {
    throw SizeLimitError("oracle limited to " + std::to_string(kOracleMaxVars) + " variables and " +
                         std::to_string(kOracleMaxTerms) + " terms");
  }
  const auto n = static_cast<std::size_t>(problem.var_count);
  std::vector<int> col_of(n, -1);
  int free_count = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!problem.anchors.contains(static_cast<int>(v))) col_of[v] = free_count++;
  }
  std::vector<std::size_t> rows_terms;
  for (std::size_t k = 0; k < problem.terms.size(); ++k) {
    const auto& t = problem.terms[k];
    if (!(problem.anchors.contains(t.u) && problem.anchors.contains(t.v))) rows_terms.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(rows_terms.size());
  const Eigen::Index fc = free_count;
  const Eigen::Index cols = 2 * fc + 2 * m;  // p, q, e+, e-
  using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Tableau tab = Tableau::Zero(m, cols + 1);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));

  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& t = problem.terms[rows_terms[static_cast<std::size_t>(r)]];
    double rhs = static_cast<double>(t.delta);
    if (const auto it = problem.anchors.find(t.u); it != problem.anchors.end()) {
      rhs -= it->second;
    } else {
      tab(r, col_of[static_cast<std::size_t>(t.u)]) += 1.0;
      tab(r, fc + col_of[static_cast<std::size_t>(t.u)]) -= 1.0;
    }
    if (const auto it = problem.anchors.find(t.v); it != problem.anchors.end()) {
      rhs += it->second;
    } else {
      tab(r, col_of[static_cast<std::size_t>(t.v)]) -= 1.0;
      tab(r, fc + col_of[static_cast<std::size_t>(t.v)]) += 1.0;
    }
    const Eigen::Index e_plus = 2 * fc + r;
    const Eigen::Index e_minus = 2 * fc + m + r;
    tab(r, e_plus) = -1.0;
    tab(r, e_minus) = 1.0;
    tab(r, cols) = rhs;
    cost(e_plus) = t.weight;
    cost(e_minus) = t.weight;
    if (rhs < 0) {
      tab.row(r) *= -1.0;
      basis[static_cast<std::size_t>(r)] = e_plus;
    } else {
      basis[static_cast<std::size_t>(r)] = e_minus;
    }
  }

  Eigen::VectorXd reduced = cost;
  for (Eigen::Index r = 0; r < m; ++r) {
    reduced -= cost(basis[static_cast<std::size_t>(r)]) * tab.row(r).head(cols).transpose();
  }

  constexpr double kTol = 1e-10;
  constexpr int kDegenerateLimit = 50;
  int degenerate_run = 0;
  for (;;) {
    Eigen::Index enter = -1;
    if (degenerate_run < kDegenerateLimit) {
      double best = -kTol;
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (reduced(c) < best) {
          best = reduced(c);
          enter = c;
        }
      }
    } else {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (reduced(c) < -kTol) {
          enter = c;
          break;
        }
      }
    }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m; ++r) {
      const double a = tab(r, enter);
      if (a <= kTol) continue;
      const double ratio = tab(r, cols) / a;
      if (ratio < best_ratio - kTol ||
          (ratio <= best_ratio + kTol && leave >= 0 &&
           basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
        best_ratio = std::min(best_ratio, ratio);
        leave = r;
      }
    }
    if (leave < 0) throw InconsistencyError("oracle found an unbounded direction");

    degenerate_run = best_ratio <= kTol ? degenerate_run + 1 : 0;
    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r != leave && tab(r, enter) != 0.0) tab.row(r) -= tab(r, enter) * tab.row(leave);
    }
    reduced -= reduced(enter) * tab.row(leave).head(cols).transpose();
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  Eigen::VectorXd primal = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index r = 0; r < m; ++r) primal(basis[static_cast<std::size_t>(r)]) = tab(r, cols);
  std::vector<double> values(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (col_of[v] >= 0) values[v] = primal(col_of[v]) - primal(fc + col_of[v]);
  }
  return finish(problem, std::move(values));
}

CollapsedProblem collapse(const PlacementProblem& problem, const std::vector<std::vector<GroupMember>>& groups) {
  problem.validate();
  const auto n = static_cast<std::size_t>(problem.var_count);
  CollapsedProblem out;
  out.group_of.assign(n, -1);
  out.offset_of.assign(n, 0);
  int next = 0;
  for (const auto& group : groups) {
    if (group.empty()) continue;
    for (const auto& member : group) {
      if (member.var < 0 || member.var >= problem.var_count) {
        throw InconsistencyError("group member out of range");
      }
      if (out.group_of[static_cast<std::size_t>(member.var)] >= 0) {
        throw InconsistencyError("variable " + std::to_string(member.var) + " listed in two groups");
      }
      out.group_of[static_cast<std::size_t>(member.var)] = next;
      out.offset_of[static_cast<std::size_t>(member.var)] = member.offset;
    }
    ++next;
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (out.group_of[v] < 0) out.group_of[v] = next++;
  }

  out.problem.var_count = next;
  for (const auto& [v, value] : problem.anchors) {
    const int g = out.group_of[static_cast<std::size_t>(v)];
    const double group_value = value - out.offset_of[static_cast<std::size_t>(v)];
    const auto [it, inserted] = out.problem.anchors.emplace(g, group_value);
    if (!inserted && std::abs(it->second - group_value) > 1e-9) {
      throw InconsistencyError("anchors inside group " + std::to_string(g) + " disagree with its offsets");
    }
  }
  for (const auto& t : problem.terms) {
    const int gu = out.group_of[static_cast<std::size_t>(t.u)];
    const int gv = out.group_of[static_cast<std::size_t>(t.v)];
    const int delta = t.delta - out.offset_of[static_cast<std::size_t>(t.u)] + out.offset_of[static_cast<std::size_t>(t.v)];
    if (gu == gv) {
      out.constant_cost += t.weight * std::abs(static_cast<double>(delta));
    } else {
      out.problem.terms.push_back({gu, gv, delta, t.weight});
    }
  }
  return out;
}

PlacementSolution expand(const CollapsedProblem& collapsed, const PlacementSolution& solution,
                         const PlacementProblem& original) {
  const auto n = collapsed.group_of.size();
  std::vector<double> values(n);
  for (std::size_t v = 0; v < n; ++v) {
    values[v] = solution.values[static_cast<std::size_t>(collapsed.group_of[v])] + collapsed.offset_of[v];
  }
  PlacementSolution out;
  out.residuals.reserve(original.terms.size());
  for (const auto& t : original.terms) {
    out.residuals.push_back(std::abs(values[static_cast<std::size_t>(t.u)] - values[static_cast<std::size_t>(t.v)] -
                                     static_cast<double>(t.delta)));
  }
  out.objective = evaluate_objective(original, values);
  out.values = std::move(values);
  return out;
}

std::string debug_dump(const PlacementProblem& problem, const PlacementSolution* solution) {
  nlohmann::json j;
  j["var_count"] = problem.var_count;
  auto& terms = j["terms"] = nlohmann::json::array();
  for (const auto& t : problem.terms) terms.push_back({{"u", t.u}, {"v", t.v}, {"delta", t.delta}, {"weight", t.weight}});
  auto& anchors = j["anchors"] = nlohmann::json::object();
  for (const auto& [v, value] : problem.anchors) anchors[std::to_string(v)] = value;
  if (solution != nullptr) {
    j["solution"] = {{"values", solution->values},
                     {"objective", solution->objective},
                     {"residuals", solution->residuals}};
  }
  return j.dump();
}

}  // namespace lpjigsaw
