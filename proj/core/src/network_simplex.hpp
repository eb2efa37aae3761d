#pragma once

#include <vector>

namespace lpjigsaw::detail {

// Primal network simplex for min-cost flow with lower bounds 0, finite upper
// bounds and node supplies summing to zero. Uses an artificial root,
// strongly feasible spanning trees and block pricing, so pivots are
// deterministic and cannot cycle. With all supplies zero the artificial arcs
// cost nothing and carry no flow, so potentials stay on the scale of the costs.
class NetworkSimplex {
 public:
  explicit NetworkSimplex(int node_count);

  int add_arc(int tail, int head, double cost, double capacity);
  void add_supply(int node, double amount) { supply_[static_cast<std::size_t>(node)] += amount; }

  void solve();

  // Node potentials with c(a) + pi(tail) - pi(head) == 0 on tree arcs and
  // complementary slackness on the rest.
  double potential(int node) const { return potential_[static_cast<std::size_t>(node)]; }
  double flow(int arc) const { return flow_[static_cast<std::size_t>(arc)]; }
  long pivots() const { return pivots_; }

 private:
  enum State : signed char { kUpper = -1, kTree = 0, kLower = 1 };

  void init_tree();
  bool find_entering(int& arc);
  void pivot(int in_arc);
  void refresh_tree();

  int node_count_;
  int root_;
  std::vector<int> tail_, head_;
  std::vector<double> cost_, cap_, flow_;
  std::vector<signed char> state_;
  std::vector<double> supply_;

  std::vector<int> parent_, pred_, depth_;
  std::vector<bool> pred_up_;  // pred arc points from the node to its parent
  std::vector<double> potential_;
  std::vector<int> child_start_, child_list_, order_;

  int real_arcs_ = 0;
  int next_arc_ = 0;
  int block_size_ = 1;
  long pivots_ = 0;
};

}  // namespace lpjigsaw::detail
