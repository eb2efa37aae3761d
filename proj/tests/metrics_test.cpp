#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lpjigsaw/errors.hpp"
#include "lpjigsaw/metrics.hpp"

namespace lpjigsaw {
namespace {

constexpr auto kT1 = PuzzleType::kType1;
constexpr auto kT2 = PuzzleType::kType2;

GroundTruth row_major_truth(int rows, int cols, std::vector<int> turns = {}) {
  GroundTruth t;
  for (int k = 0; k < rows * cols; ++k) {
    t.push_back({k / cols, k % cols, turns.empty() ? 0 : turns[static_cast<std::size_t>(k)]});
  }
  return t;
}

// Every piece at its true cell, turned back upright.
Assembly solved(const GroundTruth& truth, int rows, int cols) {
  Assembly a(rows, cols);
  for (std::size_t p = 0; p < truth.size(); ++p) {
    a.at(truth[p].row, truth[p].col) = PlacedPiece{static_cast<int>(p), (4 - truth[p].quarter_turns) % 4};
  }
  return a;
}

// Quarter turn counter-clockwise of a whole assembly: (r, c) -> (w - 1 - c, r).
Assembly turn_ccw(const Assembly& in) {
  Assembly out(in.cols, in.rows);
  for (int r = 0; r < in.rows; ++r) {
    for (int c = 0; c < in.cols; ++c) {
      auto cell = in.at(r, c);
      if (cell) cell->quarter_turns = (cell->quarter_turns + 1) % 4;
      out.at(in.cols - 1 - c, r) = cell;
    }
  }
  return out;
}

Assembly from_rows(const std::vector<std::vector<int>>& ids) {
  Assembly a(static_cast<int>(ids.size()), static_cast<int>(ids[0].size()));
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) a.at(r, c) = PlacedPiece{ids[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], 0};
  }
  return a;
}

// Independent neighbour count: a true adjacency survives if some whole-frame
// turn of the assembly shows both pieces upright at the true displacement.
double oracle_neighbor(const Assembly& assembly, const GroundTruth& truth, PuzzleType type) {
  const int frames = type == kT2 ? 4 : 1;
  std::vector<Assembly> turned = {assembly};
  for (int g = 1; g < frames; ++g) turned.push_back(turn_ccw(turned.back()));
  int total = 0;
  int good = 0;
  for (std::size_t a = 0; a < truth.size(); ++a) {
    for (std::size_t b = 0; b < truth.size(); ++b) {
      const int dr = truth[b].row - truth[a].row;
      const int dc = truth[b].col - truth[a].col;
      if (!((dr == 0 && dc == 1) || (dr == 1 && dc == 0))) continue;
      ++total;
      bool ok = false;
      for (const Assembly& f : turned) {
        int ra = -1, ca = -1, rb = -1, cb = -1;
        bool upright = true;
        for (int r = 0; r < f.rows; ++r) {
          for (int c = 0; c < f.cols; ++c) {
            const auto& cell = f.at(r, c);
            if (!cell) continue;
            const auto id = static_cast<std::size_t>(cell->piece_id);
            if (id != a && id != b) continue;
            if (type == kT2 && (cell->quarter_turns + truth[id].quarter_turns) % 4 != 0) upright = false;
            if (id == a) std::tie(ra, ca) = std::pair{r, c};
            if (id == b) std::tie(rb, cb) = std::pair{r, c};
          }
        }
        if (upright && ra >= 0 && rb >= 0 && rb - ra == dr && cb - ca == dc) ok = true;
      }
      good += ok;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(good) / total;
}

// Starts solved, turns the frame, then swaps a few cells and re-rotates a few pieces.
Assembly perturbed(const GroundTruth& truth, int rows, int cols, PuzzleType type, std::mt19937_64& rng) {
  Assembly a = solved(truth, rows, cols);
  const int frames = type == kT2 ? static_cast<int>(rng() % 4) : 0;
  for (int g = 0; g < frames; ++g) a = turn_ccw(a);
  const int n = a.rows * a.cols;
  const int swaps = static_cast<int>(rng() % 4);
  for (int k = 0; k < swaps; ++k) {
    std::swap(a.cells[rng() % static_cast<std::size_t>(n)], a.cells[rng() % static_cast<std::size_t>(n)]);
  }
  if (type == kT2 && rng() % 2) a.cells[rng() % static_cast<std::size_t>(n)]->quarter_turns ^= 1;
  return a;
}

TEST(DirectScore, Examples) {
  const GroundTruth t = row_major_truth(2, 2);
  EXPECT_EQ(direct_score(from_rows({{0, 1}, {2, 3}}), t, kT1), 1.0);
  EXPECT_EQ(direct_score(from_rows({{1, 0}, {2, 3}}), t, kT1), 0.5);
}

TEST(NeighborScore, Examples) {
  const GroundTruth t = row_major_truth(2, 2);
  EXPECT_EQ(neighbor_score(from_rows({{0, 1}, {2, 3}}), t, kT1), 1.0);
  // Of 0-1, 2-3, 0-2 and 1-3 only 2-3 survives.
  EXPECT_EQ(neighbor_score(from_rows({{1, 0}, {2, 3}}), t, kT1), 0.25);
  EXPECT_EQ(neighbor_score(from_rows({{3, 2}, {1, 0}}), t, kT1), 0.0);
}

TEST(NeighborScore, MatchesIndependentOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 2 + static_cast<int>(rng() % 3);
    const int cols = 2 + static_cast<int>(rng() % 4);
    const PuzzleType type = trial % 2 ? kT2 : kT1;
    std::vector<int> turns(static_cast<std::size_t>(rows * cols), 0);
    if (type == kT2) {
      for (auto& v : turns) v = static_cast<int>(rng() % 4);
    }
    const GroundTruth t = row_major_truth(rows, cols, turns);
    const Assembly a = perturbed(t, rows, cols, type, rng);
    EXPECT_DOUBLE_EQ(neighbor_score(a, t, type), oracle_neighbor(a, t, type)) << trial;
  }
}

TEST(NeighborScore, RandomPermutationIsNearZero) {
  const GroundTruth t = row_major_truth(18, 24);
  std::vector<int> ids(432);
  for (const std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), std::mt19937_64(seed));
    Assembly a(18, 24);
    for (int k = 0; k < 432; ++k) a.cells[static_cast<std::size_t>(k)] = PlacedPiece{ids[static_cast<std::size_t>(k)], 0};
    EXPECT_LT(neighbor_score(a, t, kT1), 0.02);
  }
}

TEST(PerfectScore, Examples) {
  const GroundTruth t = row_major_truth(2, 3);
  const Assembly good = solved(t, 2, 3);
  EXPECT_TRUE(perfect_score(good, t, kT1));
  Assembly swapped = good;
  std::swap(swapped.at(0, 0), swapped.at(1, 2));
  EXPECT_FALSE(perfect_score(swapped, t, kT1));
}

TEST(PerfectScore, TypeTwoAcceptsAnyGlobalTurn) {
  const GroundTruth t = row_major_truth(2, 3, {1, 0, 3, 2, 2, 1});
  const Assembly upright = solved(t, 2, 3);
  for (int g = 1; g < 4; ++g) {
    Assembly a = upright;
    for (int k = 0; k < g; ++k) a = turn_ccw(a);
    EXPECT_TRUE(perfect_score(a, t, kT2)) << g;
    EXPECT_EQ(direct_score(a, t, kT2), 1.0);
    EXPECT_EQ(direct_score(a, t, kT2, FramePolicy::kStrict), 0.0);
    EXPECT_EQ(neighbor_score(a, t, kT2), 1.0);
    EXPECT_EQ(largest_component_score(a, t, kT2), 1.0);
  }
  Assembly one_off = upright;
  one_off.at(0, 1)->quarter_turns = (one_off.at(0, 1)->quarter_turns + 1) % 4;
  EXPECT_FALSE(perfect_score(one_off, t, kT2));
  EXPECT_DOUBLE_EQ(direct_score(one_off, t, kT2), 5.0 / 6.0);
}

TEST(LargestComponent, HalvesAndSliding) {
  const GroundTruth t = row_major_truth(2, 4);
  EXPECT_EQ(largest_component_score(solved(t, 2, 4), t, kT1), 1.0);
  // Left and right halves exchanged: each half is internally correct.
  const Assembly halves = from_rows({{2, 3, 0, 1}, {6, 7, 4, 5}});
  EXPECT_EQ(largest_component_score(halves, t, kT1), 0.5);
  EXPECT_EQ(direct_score(halves, t, kT1), 0.0);

  const PieceCatalog cat{8, 1};
  const Component whole{{{0, 5, 9}, {1, 6, 9}, {2, 7, 9}, {3, 8, 9}, {4, 5, 10}, {5, 6, 10}, {6, 7, 10}, {7, 8, 10}}};
  const Component whole_arr[] = {whole};
  EXPECT_EQ(largest_component_score(whole_arr, cat, t, kT1), 1.0);
  const Component split[] = {{{{0, 0, 0}, {1, 1, 0}, {4, 0, 1}, {5, 1, 1}}}, {{{2, 0, 0}, {3, 1, 0}, {6, 0, 1}, {7, 1, 1}}}};
  EXPECT_EQ(largest_component_score(split, cat, t, kT1), 0.5);
}

TEST(LargestComponent, TypeTwoReplicasInARotatedFrame) {
  // Pieces 0 and 1 sit side by side in truth, both scrambled by one turn.
  // Replica 3 makes them upright (frame 0); replica 0 puts both in frame 1,
  // where the true step (0, 1) becomes (-1, 0).
  const GroundTruth t = {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}};
  const PieceCatalog cat{4, 4};
  const Component upright[] = {{{{cat.replica(0, 3), 0, 0}, {cat.replica(1, 3), 1, 0}}}};
  EXPECT_EQ(largest_component_score(upright, cat, t, kT2), 0.5);
  const Component stacked[] = {{{{cat.replica(0, 0), 0, 1}, {cat.replica(1, 0), 0, 0}}}};
  EXPECT_EQ(largest_component_score(stacked, cat, t, kT2), 0.5);
  const Component mixed[] = {{{{cat.replica(0, 0), 0, 1}, {cat.replica(1, 3), 0, 0}}}};
  EXPECT_EQ(largest_component_score(mixed, cat, t, kT2), 0.25);
}

TEST(Scores, InvariantUnderConsistentRelabelling) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 60; ++trial) {
    const int rows = 3, cols = 4, n = 12;
    const PuzzleType type = trial % 2 ? kT2 : kT1;
    std::vector<int> turns(n, 0);
    if (type == kT2) {
      for (auto& v : turns) v = static_cast<int>(rng() % 4);
    }
    const GroundTruth t = row_major_truth(rows, cols, turns);
    const Assembly a = perturbed(t, rows, cols, type, rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    GroundTruth t2(n);
    for (int p = 0; p < n; ++p) t2[static_cast<std::size_t>(perm[static_cast<std::size_t>(p)])] = t[static_cast<std::size_t>(p)];
    Assembly a2 = a;
    for (auto& cell : a2.cells) {
      if (cell) cell->piece_id = perm[static_cast<std::size_t>(cell->piece_id)];
    }
    const ScoreReport r1 = score(a, t, type);
    const ScoreReport r2 = score(a2, t2, type);
    EXPECT_EQ(r1.direct, r2.direct);
    EXPECT_EQ(r1.neighbor, r2.neighbor);
    EXPECT_EQ(r1.largest_component, r2.largest_component);
    EXPECT_EQ(r1.perfect, r2.perfect);
    for (const double v : {r1.direct, r1.neighbor, r1.largest_component}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (r1.perfect) {
      EXPECT_EQ(r1.direct, 1.0);
      EXPECT_EQ(r1.neighbor, 1.0);
    }
  }
}

TEST(Scores, PieceWithoutTruthIsADataError) {
  const GroundTruth t = row_major_truth(1, 2);
  EXPECT_THROW(direct_score(from_rows({{0, 5}}), t, kT1), DataError);
  EXPECT_THROW(neighbor_score(from_rows({{0, 5}}), t, kT1), DataError);
}

TEST(Report, CsvRoundTripAndErrors) {
  const std::vector<ReportRow> rows = {{"a,\"b\".png", "type1", "hybrid", 0.1, 1.0 / 3.0, 0.5, false, 4, 1.25},
                                       {"c.png", "type2", "free", 1.0, 1.0, 1.0, true, 1, 0.0}};
  const std::string csv = report_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "image,type,variant,direct,neighbor,largest,perfect,iterations,seconds");
  EXPECT_EQ(parse_report_csv(csv), rows);
  EXPECT_THROW(parse_report_csv("image,type\n"), DataError);
  EXPECT_THROW(parse_report_csv(""), DataError);
  const std::string header = csv.substr(0, csv.find('\n') + 1);
  EXPECT_THROW(parse_report_csv(header + "x,type1,free,0,0,0,maybe,1,0\n"), DataError);
  EXPECT_THROW(parse_report_csv(header + "x,type1,free,zero,0,0,true,1,0\n"), DataError);
  EXPECT_THROW(parse_report_csv(header + "x,type1\n"), DataError);
}

TEST(Report, JsonCarriesEveryColumn) {
  const std::vector<ReportRow> rows = {{"a.png", "type1", "hybrid", 0.25, 0.5, 0.75, false, 3, 2.0}};
  const auto j = nlohmann::json::parse(report_json(rows));
  ASSERT_EQ(j.size(), 1u);
  for (const auto& col : kReportColumns) EXPECT_TRUE(j[0].contains(col)) << col;
  EXPECT_EQ(j[0]["neighbor"].get<double>(), 0.5);
  EXPECT_EQ(j[0]["perfect"].get<bool>(), false);
}

}  // namespace
}  // namespace lpjigsaw
