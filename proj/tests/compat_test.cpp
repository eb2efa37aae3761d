#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <unistd.h>

#include "lpjigsaw/compat.hpp"
#include "lpjigsaw/errors.hpp"
#include "lpjigsaw/ingest.hpp"
#include "support/synthetic.hpp"

namespace lpjigsaw {
namespace {

Piece random_piece(int id, int px, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, kMaxIntensity);
  Piece p{id, Image(px, px), 0};
  for (auto& v : p.pixels.data()) v = static_cast<std::uint16_t>(d(rng));
  return p;
}

std::vector<Piece> random_pieces(int n, int px, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Piece> out;
  for (int k = 0; k < n; ++k) out.push_back(random_piece(k, px, rng));
  return out;
}

// Scalar reference for the left/right configuration, written out from the
// definition with an explicit cofactor inverse.
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 inverse3(const Mat3& m) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  Mat3 inv;
  inv[0][0] = c00 / det;
  inv[1][0] = c01 / det;
  inv[2][0] = c02 / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

// Sum over k of (c_k - mean)^T inv(cov + ridge) (c_k - mean), where the model
// is fitted to `grads`.
double mahalanobis_sum(const std::vector<Vec3>& grads, const std::vector<Vec3>& cross) {
  const double p = static_cast<double>(grads.size());
  Vec3 mean{0, 0, 0};
  for (const auto& g : grads) {
    for (int a = 0; a < 3; ++a) mean[a] += g[a] / p;
  }
  Mat3 cov{};
  for (const auto& g : grads) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) cov[a][b] += (g[a] - mean[a]) * (g[b] - mean[b]) / (p - 1);
    }
  }
  for (int a = 0; a < 3; ++a) cov[a][a] += 1e-6 * 65535.0 * 65535.0;
  const Mat3 inv = inverse3(cov);
  double total = 0.0;
  for (const auto& c : cross) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) total += (c[a] - mean[a]) * inv[a][b] * (c[b] - mean[b]);
    }
  }
  return total;
}

double reference_left_right(const Image& left, const Image& right) {
  const int p = left.width();
  std::vector<Vec3> g_left, g_right, cross, cross_back;
  for (int k = 0; k < p; ++k) {
    Vec3 gl, gr, c, cb;
    for (int ch = 0; ch < 3; ++ch) {
      gl[ch] = double(left.at(k, p - 1, ch)) - double(left.at(k, p - 2, ch));
      gr[ch] = double(right.at(k, 0, ch)) - double(right.at(k, 1, ch));
      c[ch] = double(right.at(k, 0, ch)) - double(left.at(k, p - 1, ch));
      cb[ch] = -c[ch];
    }
    g_left.push_back(gl);
    g_right.push_back(gr);
    cross.push_back(c);
    cross_back.push_back(cb);
  }
  return mahalanobis_sum(g_left, cross) + mahalanobis_sum(g_right, cross_back);
}

// Transposing a piece turns its down neighbor into its right neighbor.
Image transpose(const Image& img) {
  Image out(img.height(), img.width());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) out.at(c, r, ch) = img.at(r, c, ch);
    }
  }
  return out;
}

TEST(Mgc, IdenticalFlatPiecesScoreZero) {
  const Piece a{0, Image(5, 5, 1234), 0};
  const Piece b{1, Image(5, 5, 1234), 0};
  for (const Orientation o : kOrientations) EXPECT_EQ(mgc_distance(a, b, o), 0.0);
}

TEST(Mgc, RelabelledBoundaryScoresTheSame) {
  const auto pieces = random_pieces(6, 8, 1);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    for (std::size_t j = 0; j < pieces.size(); ++j) {
      if (i == j) continue;
      EXPECT_EQ(mgc_distance(pieces[i], pieces[j], Orientation::kLeft),
                mgc_distance(pieces[j], pieces[i], Orientation::kRight));
      EXPECT_EQ(mgc_distance(pieces[i], pieces[j], Orientation::kUp),
                mgc_distance(pieces[j], pieces[i], Orientation::kDown));
    }
  }
}

TEST(Mgc, MatchesScalarReferenceAtThreePixels) {
  const auto pieces = random_pieces(8, 3, 2);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    for (std::size_t j = 0; j < pieces.size(); ++j) {
      if (i == j) continue;
      const Image& pi = pieces[i].pixels;
      const Image& pj = pieces[j].pixels;
      const double right = reference_left_right(pi, pj);
      const double down = reference_left_right(transpose(pi), transpose(pj));
      EXPECT_NEAR(mgc_distance(pieces[i], pieces[j], Orientation::kRight), right, 1e-9 * right);
      EXPECT_NEAR(mgc_distance(pieces[i], pieces[j], Orientation::kDown), down, 1e-9 * down);
      EXPECT_NEAR(mgc_distance(pieces[i], pieces[j], Orientation::kLeft), reference_left_right(pj, pi),
                  1e-9 * right);
      EXPECT_NEAR(mgc_distance(pieces[i], pieces[j], Orientation::kUp),
                  reference_left_right(transpose(pj), transpose(pi)), 1e-9 * down);
    }
  }
}

TEST(Mgc, TrueNeighborsScoreBelowRandomPartners) {
  const Image img = testing::synthetic_image(4, 4, 16, 3);
  const PuzzleBundle b = slice(img, 16, 0);
  const DistanceTable t = build_distance_table(b.pieces, 1);
  const auto& truth = *b.truth;
  int wins = 0;
  int total = 0;
  for (int i = 0; i < t.size(); ++i) {
    for (int j = 0; j < t.size(); ++j) {
      const auto& ti = truth[static_cast<std::size_t>(i)];
      const auto& tj = truth[static_cast<std::size_t>(j)];
      if (tj.row != ti.row || tj.col != ti.col + 1) continue;
      for (int k = 0; k < t.size(); ++k) {
        if (k == i || k == j) continue;
        ++total;
        wins += t.at(i, j, Orientation::kRight) < t.at(i, k, Orientation::kRight) ? 1 : 0;
      }
    }
  }
  EXPECT_EQ(wins, total);
}

TEST(DistanceTable, ThreePiecesGiveTwentyFourEntries) {
  const auto pieces = random_pieces(3, 6, 4);
  const DistanceTable t = build_distance_table(pieces, 1);
  int finite = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (const Orientation o : kOrientations) {
        const double d = t.at(i, j, o);
        if (i == j) {
          EXPECT_EQ(d, kInfinity);
        } else {
          EXPECT_TRUE(std::isfinite(d));
          EXPECT_GE(d, 0.0);
          EXPECT_EQ(d, mgc_distance(pieces[static_cast<std::size_t>(i)], pieces[static_cast<std::size_t>(j)], o));
          ++finite;
        }
      }
    }
  }
  EXPECT_EQ(finite, 24);
}

TEST(DistanceTable, RelabellingSymmetryHoldsExactly) {
  const DistanceTable t = build_distance_table(random_pieces(9, 5, 5), 1);
  for (int i = 0; i < t.size(); ++i) {
    for (int j = 0; j < t.size(); ++j) {
      EXPECT_EQ(t.at(i, j, Orientation::kLeft), t.at(j, i, Orientation::kRight));
      EXPECT_EQ(t.at(i, j, Orientation::kUp), t.at(j, i, Orientation::kDown));
    }
  }
}

TEST(DistanceTable, IndependentOfThreadCount) {
  const auto pieces = random_pieces(23, 6, 6);
  const DistanceTable one = build_distance_table(pieces, 1);
  EXPECT_EQ(build_distance_table(pieces, 3), one);
  EXPECT_EQ(build_distance_table(pieces, 8), one);
  EXPECT_EQ(build_distance_table(pieces, 1), one);
}

TEST(DistanceTable, RejectsTooFewOrMismatchedPieces) {
  EXPECT_THROW(build_distance_table(random_pieces(2, 4, 7)), DimensionError);
  auto pieces = random_pieces(4, 4, 7);
  pieces[2].pixels = Image(5, 5);
  EXPECT_THROW(build_distance_table(pieces), DimensionError);
  EXPECT_THROW(build_distance_table(random_pieces(4, 1, 7)), DimensionError);
}

TEST(DistanceTable, CacheRoundTripAndCorruption) {
  const auto dir = std::filesystem::temp_directory_path() / ("lpjigsaw_compat_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const DistanceTable t = build_distance_table(random_pieces(7, 4, 8), 1);
  t.save(dir / "d.bin");
  EXPECT_EQ(std::filesystem::file_size(dir / "d.bin"), 8u + 7u * 7u * 4u * 8u);
  EXPECT_EQ(DistanceTable::load(dir / "d.bin"), t);
  std::filesystem::resize_file(dir / "d.bin", 100);
  EXPECT_THROW(DistanceTable::load(dir / "d.bin"), DataError);
  EXPECT_THROW(DistanceTable::load(dir / "missing.bin"), DataError);
  std::filesystem::remove_all(dir);
}

// Best-of-three wall time per size; the log-log slope over 100, 200 and 400
// pieces should be quadratic.
TEST(DistanceTable, BuildTimeScalesQuadratically) {
  const std::vector<int> sizes = {100, 200, 400};
  std::vector<double> lx, ly;
  for (const int n : sizes) {
    const auto pieces = random_pieces(n, 28, 9);
    double best = 1e30;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const DistanceTable t = build_distance_table(pieces, 1);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      ASSERT_EQ(t.size(), n);
    }
    lx.push_back(std::log(n));
    ly.push_back(std::log(best));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / 3;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / 3;
  double sxy = 0.0;
  double sxx = 0.0;
  for (int k = 0; k < 3; ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  const double slope = sxy / sxx;
  EXPECT_NEAR(slope, 2.0, 0.3);
}

DistanceTable table_from(const std::vector<std::vector<std::array<double, 2>>>& rd) {
  const int n = static_cast<int>(rd.size());
  DistanceTable t(n, 4);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      t.set_right(i, j, rd[i][j][0]);
      t.set_down(i, j, rd[i][j][1]);
    }
  }
  return t;
}

TEST(Weights, DirectEvaluationOfTheRatio) {
  // Slot (2, 3, right): D = 2, best alternative over k != 2 for column 3 is 4
  // and over k != 3 for row 2 is 6.
  std::vector<std::vector<std::array<double, 2>>> rd(5, std::vector<std::array<double, 2>>(5, {50.0, 50.0}));
  rd[2][3][0] = 2.0;
  rd[0][3][0] = 4.0;
  rd[2][1][0] = 6.0;
  const DistanceTable t = table_from(rd);
  const Universe u = Universe::full(5);
  const WeightTable w = build_weights(t, u);
  EXPECT_DOUBLE_EQ(w.at(2, 3, Orientation::kRight), 2.0);
  EXPECT_DOUBLE_EQ(AlternativeIndex(t, u).best_alternative(2, 3, Orientation::kRight), 4.0);
  // Equal to its best alternative.
  EXPECT_DOUBLE_EQ(w.at(4, 0, Orientation::kRight), 1.0);
  EXPECT_EQ(w.at(2, 2, Orientation::kRight), 0.0);
}

TEST(Weights, ZeroDistanceIsCapped) {
  std::vector<std::vector<std::array<double, 2>>> rd(4, std::vector<std::array<double, 2>>(4, {3.0, 3.0}));
  rd[1][2][1] = 0.0;
  const WeightTable w = build_weights(table_from(rd), Universe::full(4));
  EXPECT_EQ(w.at(1, 2, Orientation::kDown), kMaxWeight);
  EXPECT_EQ(w.at(2, 1, Orientation::kUp), kMaxWeight);
}

TEST(Weights, ProductWithDistanceIsTheBestAlternative) {
  const DistanceTable t = build_distance_table(random_pieces(10, 5, 10), 1);
  Universe u = Universe::full(10);
  u.remove({0, 1, Orientation::kRight});
  u.remove({3, 1, Orientation::kRight});
  const WeightTable w = build_weights(t, u);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      for (const Orientation o : kOrientations) {
        if (!u.contains(i, j, o)) {
          EXPECT_EQ(w.at(i, j, o), 0.0);
          continue;
        }
        double alt = kInfinity;
        for (int k = 0; k < 10; ++k) {
          if (k != i && u.contains(k, j, o)) alt = std::min(alt, t.at(k, j, o));
          if (k != j && u.contains(i, k, o)) alt = std::min(alt, t.at(i, k, o));
        }
        EXPECT_NEAR(w.at(i, j, o) * t.at(i, j, o), alt, 1e-9 * alt);
      }
    }
  }
}

// Exact rational weights alt/D (alt/0 is +infinity, 0/0 is 1) on small
// integer distances with zeros and ties. Capping must keep every exact
// weight below the cap, send every infinite one to the cap, never reverse
// an exact ordering, and leave the active selections untouched.
TEST(Weights, CapPreservesOrderingAndActiveSelections) {
  constexpr int n = 12;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> d(0, 6);
  std::vector<std::vector<std::array<double, 2>>> rd(n, std::vector<std::array<double, 2>>(n));
  for (auto& row : rd) {
    for (auto& e : row) e = {double(d(rng)), double(d(rng))};
  }
  const DistanceTable t = table_from(rd);
  const Universe u = Universe::full(n);
  const WeightTable w = build_weights(t, u);

  struct Exact {
    long num;
    long den;  // den == 0 means +infinity unless num == 0
    double lib;
  };
  std::vector<Exact> all;
  for (int i = 0; i < n; ++i) {
    for (const Orientation o : kOrientations) {
      long best = -1;
      int arg = -1;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto dij = static_cast<long>(t.at(i, j, o));
        if (arg < 0 || dij < best) {
          best = dij;
          arg = j;
        }
        long alt = -1;
        for (int k = 0; k < n; ++k) {
          if (k != i && k != j) {
            const auto a = static_cast<long>(t.at(k, j, o));
            const auto b = static_cast<long>(t.at(i, k, o));
            alt = alt < 0 ? std::min(a, b) : std::min({alt, a, b});
          }
        }
        Exact e{alt, dij, w.at(i, j, o)};
        if (e.num == 0 && e.den == 0) e = {1, 1, e.lib};
        all.push_back(e);
        if (e.den == 0) {
          EXPECT_EQ(e.lib, kMaxWeight);
        } else {
          EXPECT_NEAR(e.lib, double(e.num) / double(e.den), 1e-12);
        }
      }
      const ActiveSet a = active_set(t, u);
      const auto it = std::find_if(a.matches.begin(), a.matches.end(),
                                   [&](const OrientedMatch& m) { return m.i == i && m.o == o; });
      ASSERT_NE(it, a.matches.end());
      EXPECT_EQ(it->j, arg);
    }
  }
  auto less = [](const Exact& a, const Exact& b) {
    if (a.den == 0) return false;
    if (b.den == 0) return true;
    return a.num * b.den < b.num * a.den;
  };
  for (const auto& a : all) {
    for (const auto& b : all) {
      if (less(a, b)) {
        EXPECT_LE(a.lib, b.lib);
      }
    }
  }
}

TEST(ActiveSet, FullUniverseHasFourPerPiece) {
  const DistanceTable t = build_distance_table(random_pieces(8, 4, 12), 1);
  const ActiveSet a = active_set(t, Universe::full(8));
  EXPECT_EQ(a.matches.size(), 32u);
  EXPECT_EQ(a.skipped_slots, 0);
  for (std::size_t k = 1; k < a.matches.size(); ++k) {
    const auto& p = a.matches[k - 1];
    const auto& q = a.matches[k];
    EXPECT_TRUE(std::pair(p.i, p.o) < std::pair(q.i, q.o));
  }
}

TEST(ActiveSet, PicksTheArgminAndFallsBackAfterRemoval) {
  std::vector<std::vector<std::array<double, 2>>> rd(3, std::vector<std::array<double, 2>>(3, {1.0, 1.0}));
  rd[0][1][0] = 5.0;
  rd[0][2][0] = 3.0;
  const DistanceTable t = table_from(rd);
  Universe u = Universe::full(3);
  auto pick = [&](const Universe& uu) {
    for (const auto& m : active_set(t, uu).matches) {
      if (m.i == 0 && m.o == Orientation::kRight) return m.j;
    }
    return -1;
  };
  EXPECT_EQ(pick(u), 2);
  EXPECT_TRUE(u.remove({0, 2, Orientation::kRight}));
  EXPECT_FALSE(u.remove({0, 2, Orientation::kRight}));
  EXPECT_EQ(pick(u), 1);
  EXPECT_TRUE(u.remove({0, 1, Orientation::kRight}));
  EXPECT_EQ(pick(u), -1);
  EXPECT_EQ(active_set(t, u).skipped_slots, 1);
}

TEST(ActiveSet, TiesGoToTheSmallestCandidate) {
  std::vector<std::vector<std::array<double, 2>>> rd(4, std::vector<std::array<double, 2>>(4, {2.0, 2.0}));
  const ActiveSet a = active_set(table_from(rd), Universe::full(4));
  for (const auto& m : a.matches) EXPECT_EQ(m.j, m.i == 0 ? 1 : 0);
}

TEST(ActiveSet, SelectionsDependOnlyOnDistances) {
  const DistanceTable t = build_distance_table(random_pieces(9, 4, 13), 1);
  Universe u = Universe::full(9);
  u.remove({4, 5, Orientation::kDown});
  const ActiveSet own = active_set(t, u);
  const ActiveSet initial = active_set(t, u, Universe::full(9));
  ASSERT_EQ(own.matches.size(), initial.matches.size());
  for (std::size_t k = 0; k < own.matches.size(); ++k) EXPECT_EQ(own.matches[k].key(), initial.matches[k].key());
}

// The covariance ridge is absolute, so only slots with a true neighbor are
// expected to keep their selection; on border slots every candidate is wrong
// and near-ties may flip.
TEST(ActiveSet, InvariantUnderIntensityScaling) {
  const Image img = testing::synthetic_image(5, 5, 16, 14);
  Image half = img;
  for (auto& v : half.data()) v = static_cast<std::uint16_t>(v / 2);
  Image twice = half;
  for (auto& v : twice.data()) v = static_cast<std::uint16_t>(v * 2);
  const PuzzleBundle bh = slice(half, 16, 3);
  const DistanceTable a = build_distance_table(bh.pieces, 1);
  const DistanceTable b = build_distance_table(slice(twice, 16, 3).pieces, 1);
  const ActiveSet sa = active_set(a, Universe::full(a.size()));
  const ActiveSet sb = active_set(b, Universe::full(b.size()));
  ASSERT_EQ(sa.matches.size(), sb.matches.size());
  constexpr int kDr[4] = {-1, 0, 1, 0};
  constexpr int kDc[4] = {0, 1, 0, -1};
  int interior = 0;
  for (std::size_t k = 0; k < sa.matches.size(); ++k) {
    const auto& m = sa.matches[k];
    const auto& t = (*bh.truth)[static_cast<std::size_t>(m.i)];
    const int d = orientation_index(m.o);
    const int r = t.row + kDr[d];
    const int c = t.col + kDc[d];
    if (r < 0 || c < 0 || r >= 5 || c >= 5) continue;
    ++interior;
    EXPECT_EQ(m.key(), sb.matches[k].key());
  }
  EXPECT_EQ(interior, 80);
}

TEST(Universe, ExcludesSelfAndSamePhysicalPairs) {
  EXPECT_EQ(Universe::full(5).size(), 4u * 5u * 4u);
  const std::vector<int> phys = {0, 0, 0, 0, 1, 1, 1, 1};
  const Universe u = Universe::full(phys);
  EXPECT_EQ(u.size(), 4u * 8u * 4u);
  EXPECT_FALSE(u.contains(0, 3, Orientation::kUp));
  EXPECT_TRUE(u.contains(0, 4, Orientation::kUp));
}

}  // namespace
}  // namespace lpjigsaw
