#include "network_simplex.hpp"

#include <cmath>
#include <limits>

namespace lpjigsaw::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPricingTolerance = 1e-9;
}  // namespace

NetworkSimplex::NetworkSimplex(int node_count)
    : node_count_(node_count), root_(node_count), supply_(static_cast<std::size_t>(node_count), 0.0) {}

int NetworkSimplex::add_arc(int tail, int head, double cost, double capacity) {
  tail_.push_back(tail);
  head_.push_back(head);
  cost_.push_back(cost);
  cap_.push_back(capacity);
  flow_.push_back(0.0);
  state_.push_back(kLower);
  return static_cast<int>(tail_.size()) - 1;
}

// Artificial arcs connect every node to the root. A node with non-negative
// supply sends it up a zero-cost arc; a node with demand would need a
// big-M arc, so callers keep supplies at zero where they can (the placement
// solver always does). Artificial arcs are never priced back in.
void NetworkSimplex::init_tree() {
  real_arcs_ = static_cast<int>(tail_.size());
  double big_m = 1.0;
  for (double c : cost_) big_m += std::abs(c);
  big_m *= static_cast<double>(node_count_ + 1);

  const auto total = static_cast<std::size_t>(node_count_) + 1;
  parent_.assign(total, -1);
  pred_.assign(total, -1);
  pred_up_.assign(total, false);
  depth_.assign(total, 0);
  potential_.assign(total, 0.0);

  for (int u = 0; u < node_count_; ++u) {
    const double s = supply_[static_cast<std::size_t>(u)];
    int arc = 0;
    if (s >= 0) {
      arc = add_arc(u, root_, 0.0, kInf);
      flow_[static_cast<std::size_t>(arc)] = s;
      pred_up_[static_cast<std::size_t>(u)] = true;
    } else {
      arc = add_arc(root_, u, big_m, kInf);
      flow_[static_cast<std::size_t>(arc)] = -s;
      pred_up_[static_cast<std::size_t>(u)] = false;
    }
    state_[static_cast<std::size_t>(arc)] = kTree;
    parent_[static_cast<std::size_t>(u)] = root_;
    pred_[static_cast<std::size_t>(u)] = arc;
  }
  block_size_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(real_arcs_))));
  next_arc_ = 0;
  refresh_tree();
}

void NetworkSimplex::refresh_tree() {
  const int total = node_count_ + 1;
  child_start_.assign(static_cast<std::size_t>(total) + 1, 0);
  for (int u = 0; u < node_count_; ++u) ++child_start_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(u)]) + 1];
  for (int k = 0; k < total; ++k) child_start_[static_cast<std::size_t>(k) + 1] += child_start_[static_cast<std::size_t>(k)];
  child_list_.assign(static_cast<std::size_t>(node_count_), 0);
  std::vector<int> fill(child_start_.begin(), child_start_.end() - 1);
  for (int u = 0; u < node_count_; ++u) {
    child_list_[static_cast<std::size_t>(fill[static_cast<std::size_t>(parent_[static_cast<std::size_t>(u)])]++)] = u;
  }

  order_.clear();
  order_.push_back(root_);
  depth_[static_cast<std::size_t>(root_)] = 0;
  potential_[static_cast<std::size_t>(root_)] = 0.0;
  for (std::size_t head = 0; head < order_.size(); ++head) {
    const int p = order_[head];
    for (int k = child_start_[static_cast<std::size_t>(p)]; k < child_start_[static_cast<std::size_t>(p) + 1]; ++k) {
      const int c = child_list_[static_cast<std::size_t>(k)];
      const auto arc = static_cast<std::size_t>(pred_[static_cast<std::size_t>(c)]);
      depth_[static_cast<std::size_t>(c)] = depth_[static_cast<std::size_t>(p)] + 1;
      potential_[static_cast<std::size_t>(c)] = pred_up_[static_cast<std::size_t>(c)]
                                                    ? potential_[static_cast<std::size_t>(p)] - cost_[arc]
                                                    : potential_[static_cast<std::size_t>(p)] + cost_[arc];
      order_.push_back(c);
    }
  }
}

bool NetworkSimplex::find_entering(int& arc) {
  if (real_arcs_ == 0) return false;
  double best = 0.0;
  int best_arc = -1;
  int count = block_size_;
  int e = next_arc_;
  for (int scanned = 0; scanned < real_arcs_; ++scanned) {
    const auto k = static_cast<std::size_t>(e);
    const double reduced = cost_[k] + potential_[static_cast<std::size_t>(tail_[k])] -
                           potential_[static_cast<std::size_t>(head_[k])];
    const double violation = state_[k] * reduced;
    if (violation < best) {
      best = violation;
      best_arc = e;
    }
    if (++e == real_arcs_) e = 0;
    if (--count == 0) {
      if (best < -kPricingTolerance) {
        next_arc_ = e;
        arc = best_arc;
        return true;
      }
      count = block_size_;
    }
  }
  if (best < -kPricingTolerance) {
    next_arc_ = e;
    arc = best_arc;
    return true;
  }
  return false;
}

void NetworkSimplex::pivot(int in_arc) {
  const auto in = static_cast<std::size_t>(in_arc);
  const int first = state_[in] == kLower ? tail_[in] : head_[in];
  const int second = state_[in] == kLower ? head_[in] : tail_[in];

  int a = first;
  int b = second;
  while (a != b) {
    if (depth_[static_cast<std::size_t>(a)] > depth_[static_cast<std::size_t>(b)]) {
      a = parent_[static_cast<std::size_t>(a)];
    } else if (depth_[static_cast<std::size_t>(b)] > depth_[static_cast<std::size_t>(a)]) {
      b = parent_[static_cast<std::size_t>(b)];
    } else {
      a = parent_[static_cast<std::size_t>(a)];
      b = parent_[static_cast<std::size_t>(b)];
    }
  }
  const int join = a;

  // Leaving arc: the last blocking arc met when walking the cycle in its
  // orientation starting from the join node (keeps the tree strongly feasible).
  double delta = cap_[in];
  int u_out = -1;
  int side = 0;
  for (int w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
    const auto e = static_cast<std::size_t>(pred_[static_cast<std::size_t>(w)]);
    const double d = pred_up_[static_cast<std::size_t>(w)] ? flow_[e] : cap_[e] - flow_[e];
    if (d < delta) {
      delta = d;
      u_out = w;
      side = 1;
    }
  }
  for (int w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
    const auto e = static_cast<std::size_t>(pred_[static_cast<std::size_t>(w)]);
    const double d = pred_up_[static_cast<std::size_t>(w)] ? cap_[e] - flow_[e] : flow_[e];
    if (d <= delta) {
      delta = d;
      u_out = w;
      side = 2;
    }
  }

  if (delta > 0) {
    flow_[in] += state_[in] * delta;
    for (int w = first; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto e = static_cast<std::size_t>(pred_[static_cast<std::size_t>(w)]);
      flow_[e] += pred_up_[static_cast<std::size_t>(w)] ? -delta : delta;
    }
    for (int w = second; w != join; w = parent_[static_cast<std::size_t>(w)]) {
      const auto e = static_cast<std::size_t>(pred_[static_cast<std::size_t>(w)]);
      flow_[e] += pred_up_[static_cast<std::size_t>(w)] ? delta : -delta;
    }
  }

  if (side == 0) {
    // The entering arc itself blocks: it jumps to its other bound.
    flow_[in] = state_[in] == kLower ? cap_[in] : 0.0;
    state_[in] = static_cast<signed char>(-state_[in]);
    return;
  }

  const auto out = static_cast<std::size_t>(pred_[static_cast<std::size_t>(u_out)]);
  const bool up = pred_up_[static_cast<std::size_t>(u_out)];
  const bool to_zero = side == 1 ? up : !up;
  flow_[out] = to_zero ? 0.0 : cap_[out];
  state_[out] = to_zero ? kLower : kUpper;
  state_[in] = kTree;

  // Re-hang the detached subtree below the entering arc, reversing the
  // parent chain from the new child up to u_out.
  int v = side == 1 ? first : second;
  int new_parent = side == 1 ? second : first;
  int arc = in_arc;
  bool arc_up = tail_[in] == v;
  for (;;) {
    const auto vv = static_cast<std::size_t>(v);
    const int old_parent = parent_[vv];
    const int old_arc = pred_[vv];
    const bool old_up = pred_up_[vv];
    parent_[vv] = new_parent;
    pred_[vv] = arc;
    pred_up_[vv] = arc_up;
    if (v == u_out) break;
    new_parent = v;
    arc = old_arc;
    arc_up = !old_up;
    v = old_parent;
  }
  refresh_tree();
}

void NetworkSimplex::solve() {
  init_tree();
  int arc = -1;
  while (find_entering(arc)) {
    pivot(arc);
    ++pivots_;
  }
}

}  // namespace lpjigsaw::detail
