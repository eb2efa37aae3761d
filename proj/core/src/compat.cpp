#include "lpjigsaw/compat.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <thread>

#include "lpjigsaw/errors.hpp"

namespace lpjigsaw {

namespace {

enum class Side { kTop, kRight, kBottom, kLeft };

// Boundary pixels of one side, ordered along the edge (left-to-right for
// horizontal edges, top-to-bottom for vertical ones), plus the gradient model
// of that side: mean and regularized inverse covariance of
// (boundary - inner neighbor).
struct SideModel {
  std::vector<Eigen::Vector3d> boundary;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inv_cov = Eigen::Matrix3d::Identity();
  Eigen::Vector3d inv_cov_mean = Eigen::Vector3d::Zero();
  double mean_quad = 0.0;
};

Eigen::Vector3d pixel(const Image& img, int row, int col) {
  return {static_cast<double>(img.at(row, col, 0)), static_cast<double>(img.at(row, col, 1)),
          static_cast<double>(img.at(row, col, 2))};
}

SideModel side_model(const Image& img, Side side) {
  const int p = img.width();
  SideModel m;
  m.boundary.resize(static_cast<std::size_t>(p));
  std::vector<Eigen::Vector3d> grad(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) {
    Eigen::Vector3d edge;
    Eigen::Vector3d inner;
    switch (side) {
      case Side::kTop:
        edge = pixel(img, 0, k);
        inner = pixel(img, 1, k);
        break;
      case Side::kBottom:
        edge = pixel(img, p - 1, k);
        inner = pixel(img, p - 2, k);
        break;
      case Side::kLeft:
        edge = pixel(img, k, 0);
        inner = pixel(img, k, 1);
        break;
      case Side::kRight:
        edge = pixel(img, k, p - 1);
        inner = pixel(img, k, p - 2);
        break;
    }
    m.boundary[static_cast<std::size_t>(k)] = edge;
    grad[static_cast<std::size_t>(k)] = edge - inner;
  }
  for (const auto& g : grad) m.mean += g;
  m.mean /= static_cast<double>(p);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& g : grad) {
    const Eigen::Vector3d d = g - m.mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(p - 1);
  cov += kCovarianceRidge * Eigen::Matrix3d::Identity();
  m.inv_cov = cov.inverse();
  m.inv_cov_mean = m.inv_cov * m.mean;
  m.mean_quad = m.mean.dot(m.inv_cov_mean);
  return m;
}

// `first` is the side of the piece whose outward neighbor is the other piece;
// cross gradients c_k = second.boundary[k] - first.boundary[k]. The first
// side scores c_k, the second scores -c_k.
double pair_distance(const SideModel& first, const SideModel& second) {
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < first.boundary.size(); ++k) {
    const Eigen::Vector3d c = second.boundary[k] - first.boundary[k];
    scatter.noalias() += c * c.transpose();
    sum += c;
  }
  const double count = static_cast<double>(first.boundary.size());
  const double a = (first.inv_cov.cwiseProduct(scatter)).sum() - 2.0 * first.inv_cov_mean.dot(sum) +
                   count * first.mean_quad;
  const double b = (second.inv_cov.cwiseProduct(scatter)).sum() + 2.0 * second.inv_cov_mean.dot(sum) +
                   count * second.mean_quad;
  return std::max(0.0, a) + std::max(0.0, b);
}

struct PieceModels {
  SideModel top, right, bottom, left;
};

PieceModels piece_models(const Piece& piece) {
  return {side_model(piece.pixels, Side::kTop), side_model(piece.pixels, Side::kRight),
          side_model(piece.pixels, Side::kBottom), side_model(piece.pixels, Side::kLeft)};
}

void check_piece(const Piece& piece, int piece_px) {
  if (piece.pixels.width() != piece_px || piece.pixels.height() != piece_px) {
    throw DimensionError("pieces must be square and of equal size");
  }
  if (piece_px < 2) throw DimensionError("piece_px must be at least 2");
}

}  // namespace

double mgc_distance(const Piece& pi, const Piece& pj, Orientation o) {
  check_piece(pi, pi.pixels.width());
  check_piece(pj, pi.pixels.width());
  const auto mi = piece_models(pi);
  const auto mj = piece_models(pj);
  switch (o) {
    case Orientation::kRight:
      return pair_distance(mi.right, mj.left);
    case Orientation::kLeft:
      return pair_distance(mj.right, mi.left);
    case Orientation::kDown:
      return pair_distance(mi.bottom, mj.top);
    case Orientation::kUp:
      return pair_distance(mj.bottom, mi.top);
  }
  return kInfinity;
}

DistanceTable::DistanceTable(int piece_count, int piece_px)
    : n_(piece_count),
      piece_px_(piece_px),
      right_(static_cast<std::size_t>(piece_count) * static_cast<std::size_t>(piece_count), kInfinity),
      down_(right_.size(), kInfinity) {}

double DistanceTable::at(int i, int j, Orientation o) const {
  if (i == j) return kInfinity;
  switch (o) {
    case Orientation::kRight:
      return right_[index(i, j)];
    case Orientation::kLeft:
      return right_[index(j, i)];
    case Orientation::kDown:
      return down_[index(i, j)];
    case Orientation::kUp:
      return down_[index(j, i)];
  }
  return kInfinity;
}

namespace {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

}  // namespace

void DistanceTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(n_), static_cast<std::uint32_t>(piece_px_)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<double> row(static_cast<std::size_t>(n_) * 4);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      for (auto o : kOrientations) {
        row[static_cast<std::size_t>(j) * 4 + static_cast<std::size_t>(orientation_index(o))] = at(i, j, o);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

DistanceTable DistanceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::uint32_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw DataError("truncated distance cache header");
  const int n = static_cast<int>(header[0]);
  const auto expected = sizeof(header) + static_cast<std::uintmax_t>(n) * n * 4 * sizeof(double);
  if (std::filesystem::file_size(path) != expected) throw DataError("distance cache has wrong size");
  DistanceTable table(n, static_cast<int>(header[1]));
  std::vector<double> row(static_cast<std::size_t>(n) * 4);
  for (int i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw DataError("truncated distance cache");
    for (int j = 0; j < n; ++j) {
      table.set_right(i, j, row[static_cast<std::size_t>(j) * 4 + 1]);
      table.set_down(i, j, row[static_cast<std::size_t>(j) * 4 + 2]);
    }
  }
  return table;
}

DistanceTable build_distance_table(std::span<const Piece> pieces, unsigned threads) {
  const int n = static_cast<int>(pieces.size());
  if (n < 3) throw DimensionError("at least 3 pieces are needed for confidence weights");
  const int piece_px = pieces.front().pixels.width();
  for (const auto& piece : pieces) check_piece(piece, piece_px);

  std::vector<PieceModels> models;
  models.reserve(pieces.size());
  for (const auto& piece : pieces) models.push_back(piece_models(piece));

  DistanceTable table(n, piece_px);
  auto fill_rows = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto& a = models[static_cast<std::size_t>(i)];
        const auto& b = models[static_cast<std::size_t>(j)];
        table.set_right(i, j, pair_distance(a.right, b.left));
        table.set_down(i, j, pair_distance(a.bottom, b.top));
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  if (threads <= 1) {
    fill_rows(0, n);
    return table;
  }
  std::vector<std::jthread> workers;
  const int chunk = (n + static_cast<int>(threads) - 1) / static_cast<int>(threads);
  for (int begin = 0; begin < n; begin += chunk) {
    workers.emplace_back(fill_rows, begin, std::min(n, begin + chunk));
  }
  return table;  // jthreads join before the table is moved out
}

Universe Universe::full(int piece_count) {
  std::vector<int> ids(static_cast<std::size_t>(piece_count));
  for (int k = 0; k < piece_count; ++k) ids[static_cast<std::size_t>(k)] = k;
  return full(ids);
}

Universe Universe::full(std::span<const int> physical_ids) {
  Universe u;
  u.n_ = static_cast<int>(physical_ids.size());
  u.member_.assign(static_cast<std::size_t>(u.n_) * static_cast<std::size_t>(u.n_) * 4, 0);
  for (auto o : kOrientations) {
    for (int i = 0; i < u.n_; ++i) {
      for (int j = 0; j < u.n_; ++j) {
        if (physical_ids[static_cast<std::size_t>(i)] == physical_ids[static_cast<std::size_t>(j)]) continue;
        u.member_[u.index(i, j, o)] = 1;
        ++u.size_;
      }
    }
  }
  return u;
}

bool Universe::remove(const MatchKey& k) {
  auto& slot = member_[index(k.i, k.j, k.o)];
  if (slot == 0) return false;
  slot = 0;
  --size_;
  return true;
}

AlternativeIndex::AlternativeIndex(const DistanceTable& table, const Universe& universe)
    : table_(&table),
      n_(table.size()),
      rows_(static_cast<std::size_t>(n_) * 4),
      cols_(static_cast<std::size_t>(n_) * 4) {
  for (auto o : kOrientations) {
    const auto base = static_cast<std::size_t>(orientation_index(o)) * static_cast<std::size_t>(n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (!universe.contains(i, j, o)) continue;
        const double d = table.at(i, j, o);
        rows_[base + static_cast<std::size_t>(i)].offer(j, d);
        cols_[base + static_cast<std::size_t>(j)].offer(i, d);
      }
    }
  }
}

double AlternativeIndex::best_alternative(int i, int j, Orientation o) const {
  const auto base = static_cast<std::size_t>(orientation_index(o)) * static_cast<std::size_t>(n_);
  return std::min(cols_[base + static_cast<std::size_t>(j)].excluding(i),
                  rows_[base + static_cast<std::size_t>(i)].excluding(j));
}

double AlternativeIndex::weight(int i, int j, Orientation o) const {
  const double alternative = best_alternative(i, j, o);
  const double d = std::max(table_->at(i, j, o), kMinDistance);
  if (!(alternative < kInfinity)) return kMaxWeight;
  return std::min(std::max(alternative, kMinDistance) / d, kMaxWeight);
}

WeightTable::WeightTable(int piece_count)
    : n_(piece_count),
      w_(static_cast<std::size_t>(piece_count) * static_cast<std::size_t>(piece_count) * 4, 0.0) {}

WeightTable build_weights(const DistanceTable& table, const Universe& universe) {
  const AlternativeIndex index(table, universe);
  WeightTable weights(table.size());
  for (int i = 0; i < table.size(); ++i) {
    for (int j = 0; j < table.size(); ++j) {
      for (auto o : kOrientations) {
        if (universe.contains(i, j, o)) weights.at(i, j, o) = index.weight(i, j, o);
      }
    }
  }
  return weights;
}

ActiveSet active_set(const DistanceTable& table, const Universe& universe,
                     const Universe& weight_universe) {
  const int n = table.size();
  const AlternativeIndex index(table, weight_universe);
  ActiveSet result;
  result.matches.reserve(static_cast<std::size_t>(n) * 4);
  for (int i = 0; i < n; ++i) {
    for (auto o : kOrientations) {
      int best = -1;
      double best_d = kInfinity;
      for (int j = 0; j < n; ++j) {
        if (!universe.contains(i, j, o)) continue;
        const double d = table.at(i, j, o);
        if (best < 0 || d < best_d) {
          best = j;
          best_d = d;
        }
      }
      if (best < 0) {
        ++result.skipped_slots;
        continue;
      }
      result.matches.push_back({i, best, o, index.weight(i, best, o)});
    }
  }
  return result;
}

}  // namespace lpjigsaw
