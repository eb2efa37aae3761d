#include "lpjigsaw/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lpjigsaw/errors.hpp"

namespace lpjigsaw {

using nlohmann::json;

std::string to_string(PuzzleType type) { return type == PuzzleType::kType1 ? "type1" : "type2"; }

PuzzleType puzzle_type_from_string(const std::string& text) {
  if (text == "type1" || text == "1") return PuzzleType::kType1;
  if (text == "type2" || text == "2") return PuzzleType::kType2;
  throw DataError("unknown puzzle type '" + text + "'");
}

PuzzleBundle slice(const Image& image, int piece_px, std::uint64_t seed) {
  if (piece_px < 2) throw DimensionError("piece_px must be at least 2");
  if (image.width() % piece_px != 0 || image.height() % piece_px != 0) {
    throw DimensionError("image " + std::to_string(image.width()) + "x" +
                         std::to_string(image.height()) + " is not a multiple of piece size " +
                         std::to_string(piece_px));
  }
  PuzzleBundle bundle;
  bundle.spec = {image.height() / piece_px, image.width() / piece_px, piece_px};
  bundle.spec.validate();
  bundle.seed = seed;
  const int n = bundle.spec.piece_count();

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  bundle.pieces.resize(static_cast<std::size_t>(n));
  GroundTruth truth(static_cast<std::size_t>(n));
  for (int id = 0; id < n; ++id) {
    const int cell = order[static_cast<std::size_t>(id)];
    const int row = cell / bundle.spec.cols;
    const int col = cell % bundle.spec.cols;
    auto& piece = bundle.pieces[static_cast<std::size_t>(id)];
    piece.id = id;
    piece.pixels = image.crop(row * piece_px, col * piece_px, piece_px, piece_px);
    truth[static_cast<std::size_t>(id)] = {row, col, 0};
  }
  bundle.truth = std::move(truth);
  return bundle;
}

Image center_crop(const Image& image, int piece_px) {
  if (piece_px < 2) throw DimensionError("piece_px must be at least 2");
  const int w = image.width() / piece_px * piece_px;
  const int h = image.height() / piece_px * piece_px;
  if (w == 0 || h == 0) throw DimensionError("image smaller than one piece");
  return image.crop((image.height() - h) / 2, (image.width() - w) / 2, w, h);
}

PuzzleBundle apply_rotations(const PuzzleBundle& bundle, std::span<const int> quarter_turns) {
  if (bundle.type != PuzzleType::kType1 || !bundle.truth) {
    throw DataError("Type-2 scrambling needs a Type-1 bundle with ground truth");
  }
  if (quarter_turns.size() != bundle.pieces.size()) {
    throw DimensionError("one rotation per piece required");
  }
  PuzzleBundle out = bundle;
  out.type = PuzzleType::kType2;
  for (std::size_t k = 0; k < out.pieces.size(); ++k) {
    const int turns = ((quarter_turns[k] % 4) + 4) % 4;
    out.pieces[k].pixels = rotate_ccw(bundle.pieces[k].pixels, turns);
    (*out.truth)[k].quarter_turns = turns;
  }
  return out;
}

PuzzleBundle scramble_type2(const PuzzleBundle& bundle, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> turn(0, 3);
  std::vector<int> turns(bundle.pieces.size());
  for (auto& t : turns) t = turn(rng);
  return apply_rotations(bundle, turns);
}

PuzzleBundle add_noise(const PuzzleBundle& bundle, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw DataError("noise sigma must be non-negative");
  PuzzleBundle out = bundle;
  out.noise_sigma = sigma;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& piece : out.pieces) {
    for (auto& v : piece.pixels.data()) {
      const double noisy = std::clamp(static_cast<double>(v) + noise(rng), 0.0, 65535.0);
      v = static_cast<std::uint16_t>(std::lround(noisy));
    }
  }
  return out;
}

Image reassemble_from_truth(const PuzzleBundle& bundle) {
  if (!bundle.truth) throw DataError("bundle has no ground truth");
  const int p = bundle.spec.piece_px;
  Image out(bundle.spec.cols * p, bundle.spec.rows * p);
  for (std::size_t k = 0; k < bundle.pieces.size(); ++k) {
    const auto& t = (*bundle.truth)[k];
    out.paste(rotate_ccw(bundle.pieces[k].pixels, -t.quarter_turns), t.row * p, t.col * p);
  }
  return out;
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::filesystem::path piece_path(const std::filesystem::path& dir, int id) {
  return dir / ("piece_" + std::to_string(id) + ".png");
}

}  // namespace

void save_bundle(const PuzzleBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest = {
      {"spec", {{"rows", bundle.spec.rows}, {"cols", bundle.spec.cols}, {"piece_px", bundle.spec.piece_px}}},
      {"type_tag", to_string(bundle.type)},
      {"seed", bundle.seed},
      {"noise_sigma", bundle.noise_sigma},
      {"piece_count", bundle.pieces.size()},
  };
  write_json(dir / "manifest.json", manifest);
  for (const auto& piece : bundle.pieces) write_png(piece_path(dir, piece.id), piece.pixels);

  const auto truth_path = dir / "truth.json";
  if (bundle.truth) {
    json entries = json::array();
    for (std::size_t k = 0; k < bundle.truth->size(); ++k) {
      const auto& t = (*bundle.truth)[k];
      entries.push_back({{"id", k}, {"row", t.row}, {"col", t.col}, {"rotation_deg", 90 * t.quarter_turns}});
    }
    write_json(truth_path, {{"pieces", entries}});
  } else {
    std::filesystem::remove(truth_path);
  }
}

PuzzleBundle load_bundle(const std::filesystem::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  PuzzleBundle bundle;
  try {
    const auto& spec = manifest.at("spec");
    bundle.spec = {spec.at("rows").get<int>(), spec.at("cols").get<int>(), spec.at("piece_px").get<int>()};
    bundle.type = puzzle_type_from_string(manifest.at("type_tag").get<std::string>());
    bundle.seed = manifest.value("seed", std::uint64_t{0});
    bundle.noise_sigma = manifest.value("noise_sigma", 0.0);
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  bundle.spec.validate();
  const int n = bundle.spec.piece_count();
  bundle.pieces.reserve(static_cast<std::size_t>(n));
  for (int id = 0; id < n; ++id) {
    Piece piece;
    piece.id = id;
    piece.pixels = read_image(piece_path(dir, id));
    if (piece.pixels.width() != bundle.spec.piece_px || piece.pixels.height() != bundle.spec.piece_px) {
      throw DataError("piece " + std::to_string(id) + " does not match piece_px");
    }
    bundle.pieces.push_back(std::move(piece));
  }
  return bundle;
}

GroundTruth load_truth(const std::filesystem::path& dir) {
  const json doc = read_json(dir / "truth.json");
  GroundTruth truth;
  try {
    const auto& entries = doc.at("pieces");
    truth.resize(entries.size());
    for (const auto& e : entries) {
      const auto id = e.at("id").get<std::size_t>();
      if (id >= truth.size()) throw DataError("truth.json: piece id out of range");
      truth[id] = {e.at("row").get<int>(), e.at("col").get<int>(), e.at("rotation_deg").get<int>() / 90};
    }
  } catch (const json::exception& e) {
    throw DataError("truth.json: " + std::string(e.what()));
  }
  return truth;
}

}  // namespace lpjigsaw
