#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "lpjigsaw/core.hpp"

namespace lpjigsaw {

inline constexpr double kIntensityScale = 65535.0;
// Ridge added to every side-gradient covariance so flat patches stay invertible.
inline constexpr double kCovarianceRidge = 1e-6 * kIntensityScale * kIntensityScale;
// Distances are floored at kMinDistance before the confidence ratio, and the
// ratio is capped at kMaxWeight.
inline constexpr double kMinDistance = 1e-12;
inline constexpr double kMaxWeight = 1e6;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct MatchKey {
  int i = 0;
  int j = 0;
  Orientation o = Orientation::kUp;

  friend bool operator==(const MatchKey&, const MatchKey&) = default;
  friend auto operator<=>(const MatchKey&, const MatchKey&) = default;
};

struct OrientedMatch {
  int i = 0;
  int j = 0;
  Orientation o = Orientation::kUp;
  double weight = 0.0;

  MatchKey key() const { return {i, j, o}; }
};

// Mahalanobis gradient compatibility of pieces `pi` and `pj` in
// configuration `o` (j sits in direction `o` of i). Symmetrized: the
// cross-boundary gradients are scored against the gradient model of both
// boundary sides.
double mgc_distance(const Piece& pi, const Piece& pj, Orientation o);

// D(i, j, o) for every ordered pair of distinct pieces. Only the kRight and
// kDown planes are stored; kLeft and kUp are their transposes, so
// D(i,j,kLeft) == D(j,i,kRight) and D(i,j,kUp) == D(j,i,kDown) hold exactly.
class DistanceTable {
 public:
  DistanceTable() = default;
  DistanceTable(int piece_count, int piece_px);

  int size() const { return n_; }
  int piece_px() const { return piece_px_; }

  // +infinity on the diagonal.
  double at(int i, int j, Orientation o) const;
  double at(const MatchKey& k) const { return at(k.i, k.j, k.o); }

  void set_right(int i, int j, double d) { right_[index(i, j)] = d; }
  void set_down(int i, int j, double d) { down_[index(i, j)] = d; }

  // Binary cache: little-endian uint32 n, uint32 piece_px, then n*n*4
  // float64 values ordered (i, j, o) row-major with o = 1..4 (diagonal +inf).
  void save(const std::filesystem::path& path) const;
  static DistanceTable load(const std::filesystem::path& path);

  friend bool operator==(const DistanceTable&, const DistanceTable&) = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }

  int n_ = 0;
  int piece_px_ = 0;
  std::vector<double> right_;
  std::vector<double> down_;
};

// Throws DimensionError for fewer than 3 pieces or mismatched piece sizes.
// `threads` == 0 picks the hardware concurrency; results do not depend on it.
DistanceTable build_distance_table(std::span<const Piece> pieces, unsigned threads = 0);

// Set of oriented matches still under consideration. Self-pairs never belong
// to it; with `physical_ids`, neither do pairs of copies of one physical piece.
class Universe {
 public:
  Universe() = default;
  static Universe full(int piece_count);
  static Universe full(std::span<const int> physical_ids);

  int piece_count() const { return n_; }
  std::size_t size() const { return size_; }

  bool contains(int i, int j, Orientation o) const { return member_[index(i, j, o)] != 0; }
  bool contains(const MatchKey& k) const { return contains(k.i, k.j, k.o); }
  // Returns true if the key was present.
  bool remove(const MatchKey& k);

 private:
  std::size_t index(int i, int j, Orientation o) const {
    return (static_cast<std::size_t>(orientation_index(o)) * static_cast<std::size_t>(n_) +
            static_cast<std::size_t>(i)) *
               static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j);
  }

  int n_ = 0;
  std::size_t size_ = 0;
  std::vector<std::uint8_t> member_;
};

// Per-slot best and runner-up distances over a universe, from which
// confidence weights follow in O(1).
class AlternativeIndex {
 public:
  AlternativeIndex(const DistanceTable& table, const Universe& universe);

  // min(min_{k != i} D(k,j,o), min_{k != j} D(i,k,o)) over the universe.
  double best_alternative(int i, int j, Orientation o) const;
  // best_alternative / max(D, kMinDistance), capped at kMaxWeight.
  double weight(int i, int j, Orientation o) const;

 private:
  struct Best {
    int arg = -1;
    double first = kInfinity;
    double second = kInfinity;

    void offer(int k, double d) {
      if (d < first) {
        second = first;
        first = d;
        arg = k;
      } else if (d < second) {
        second = d;
      }
    }
    double excluding(int k) const { return k == arg ? second : first; }
  };

  const DistanceTable* table_;
  int n_;
  std::vector<Best> rows_;  // [o][i]
  std::vector<Best> cols_;  // [o][j]
};

// Dense (i, j, o) weight map; entries outside the universe are 0.
class WeightTable {
 public:
  WeightTable() = default;
  explicit WeightTable(int piece_count);

  double at(int i, int j, Orientation o) const { return w_[index(i, j, o)]; }
  double& at(int i, int j, Orientation o) { return w_[index(i, j, o)]; }

 private:
  std::size_t index(int i, int j, Orientation o) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j)) * 4 +
           static_cast<std::size_t>(orientation_index(o));
  }
  int n_ = 0;
  std::vector<double> w_;
};

WeightTable build_weights(const DistanceTable& table, const Universe& universe);

struct ActiveSet {
  std::vector<OrientedMatch> matches;  // ordered by (i, o)
  int skipped_slots = 0;               // (i, o) slots with no surviving candidate
};

// For each piece i and orientation o, the j minimizing D(i,j,o) over the
// universe (ties: smallest j). Weights come from `weight_universe`.
ActiveSet active_set(const DistanceTable& table, const Universe& universe,
                     const Universe& weight_universe);
inline ActiveSet active_set(const DistanceTable& table, const Universe& universe) {
  return active_set(table, universe, universe);
}

}  // namespace lpjigsaw
