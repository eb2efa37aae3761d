#include "lpjigsaw/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "lpjigsaw/errors.hpp"

namespace lpjigsaw {

namespace {

struct Cell {
  int row = 0;
  int col = 0;
  int physical = 0;
  int rotation = 0;
};

struct Vec {
  int dr = 0;
  int dc = 0;
  friend bool operator==(const Vec&, const Vec&) = default;
};

// One counter-clockwise quarter turn of a displacement.
Vec turn(Vec v, int quarter_turns) {
  for (int k = 0; k < quarter_turns; ++k) v = {-v.dc, v.dr};
  return v;
}

int frame_of(const TruthEntry& t, int rotation) { return (t.quarter_turns + rotation) % 4; }

// True when `b` sits at displacement `d` from `a` as the truth demands.
bool correct_pair(const Cell& a, const Cell& b, Vec d, const GroundTruth& truth, PuzzleType type) {
  const TruthEntry& ta = truth[static_cast<std::size_t>(a.physical)];
  const TruthEntry& tb = truth[static_cast<std::size_t>(b.physical)];
  const Vec expected{tb.row - ta.row, tb.col - ta.col};
  if (type == PuzzleType::kType1) return d == expected;
  const int g = frame_of(ta, a.rotation);
  if (frame_of(tb, b.rotation) != g) return false;
  return d == turn(expected, g);
}

std::vector<Cell> cells_of(const Assembly& assembly) {
  std::vector<Cell> out;
  for (int r = 0; r < assembly.rows; ++r) {
    for (int c = 0; c < assembly.cols; ++c) {
      if (const auto& p = assembly.at(r, c)) out.push_back({r, c, p->piece_id, p->quarter_turns});
    }
  }
  return out;
}

void check_truth(const GroundTruth& truth, int physical) {
  if (physical < 0 || physical >= static_cast<int>(truth.size())) {
    throw DataError("piece " + std::to_string(physical) + " has no ground-truth entry");
  }
}

int largest_connected(const std::vector<Cell>& cells, const GroundTruth& truth, PuzzleType type) {
  std::map<std::pair<int, int>, std::size_t> at;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    check_truth(truth, cells[k].physical);
    at[{cells[k].row, cells[k].col}] = k;
  }
  std::vector<std::size_t> parent(cells.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t k = 0; k < cells.size(); ++k) {
    for (const Vec d : {Vec{0, 1}, Vec{1, 0}}) {
      const auto it = at.find({cells[k].row + d.dr, cells[k].col + d.dc});
      if (it == at.end()) continue;
      if (correct_pair(cells[k], cells[it->second], d, truth, type)) parent[find(k)] = find(it->second);
    }
  }
  std::vector<int> size(cells.size(), 0);
  int best = 0;
  for (std::size_t k = 0; k < cells.size(); ++k) best = std::max(best, ++size[find(k)]);
  return best;
}

// Truth cell of `t` after `g` quarter turns of the whole R x C truth image.
std::pair<int, int> turned_cell(const TruthEntry& t, int g, int rows, int cols) {
  int r = t.row;
  int c = t.col;
  int h = rows;
  int w = cols;
  for (int k = 0; k < g; ++k) {
    const int nr = w - 1 - c;
    c = r;
    r = nr;
    std::swap(h, w);
  }
  return {r, c};
}

std::pair<int, int> truth_dims(const GroundTruth& truth) {
  int rows = 0;
  int cols = 0;
  for (const auto& t : truth) {
    rows = std::max(rows, t.row + 1);
    cols = std::max(cols, t.col + 1);
  }
  return {rows, cols};
}

int direct_count(const Assembly& assembly, const GroundTruth& truth, PuzzleType type, int g) {
  const auto [rows, cols] = truth_dims(truth);
  const bool odd = g % 2 == 1;
  if (assembly.rows != (odd ? cols : rows) || assembly.cols != (odd ? rows : cols)) return 0;
  int count = 0;
  for (const Cell& cell : cells_of(assembly)) {
    check_truth(truth, cell.physical);
    const TruthEntry& t = truth[static_cast<std::size_t>(cell.physical)];
    if (turned_cell(t, g, rows, cols) != std::pair{cell.row, cell.col}) continue;
    if (type == PuzzleType::kType2 && frame_of(t, cell.rotation) != g) continue;
    ++count;
  }
  return count;
}

int best_direct_count(const Assembly& assembly, const GroundTruth& truth, PuzzleType type, FramePolicy policy) {
  const int frames = type == PuzzleType::kType2 && policy == FramePolicy::kBestOfFour ? 4 : 1;
  int best = 0;
  for (int g = 0; g < frames; ++g) best = std::max(best, direct_count(assembly, truth, type, g));
  return best;
}

}  // namespace

double direct_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type, FramePolicy policy) {
  if (truth.empty()) return 0.0;
  return static_cast<double>(best_direct_count(assembly, truth, type, policy)) / static_cast<double>(truth.size());
}

double neighbor_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type) {
  const auto [rows, cols] = truth_dims(truth);
  std::vector<int> truth_at(static_cast<std::size_t>(rows * cols), -1);
  for (std::size_t p = 0; p < truth.size(); ++p) {
    truth_at[static_cast<std::size_t>(truth[p].row * cols + truth[p].col)] = static_cast<int>(p);
  }
  std::vector<std::optional<Cell>> where(truth.size());
  for (const Cell& cell : cells_of(assembly)) {
    check_truth(truth, cell.physical);
    where[static_cast<std::size_t>(cell.physical)] = cell;
  }
  int total = 0;
  int good = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int a = truth_at[static_cast<std::size_t>(r * cols + c)];
      for (const Vec d : {Vec{0, 1}, Vec{1, 0}}) {
        if (r + d.dr >= rows || c + d.dc >= cols) continue;
        const int b = truth_at[static_cast<std::size_t>((r + d.dr) * cols + c + d.dc)];
        ++total;
        if (a < 0 || b < 0) continue;
        const auto& ca = where[static_cast<std::size_t>(a)];
        const auto& cb = where[static_cast<std::size_t>(b)];
        if (!ca || !cb) continue;
        if (correct_pair(*ca, *cb, {cb->row - ca->row, cb->col - ca->col}, truth, type)) ++good;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(good) / total;
}

double largest_component_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type) {
  if (truth.empty()) return 0.0;
  return static_cast<double>(largest_connected(cells_of(assembly), truth, type)) /
         static_cast<double>(truth.size());
}

double largest_component_score(std::span<const Component> components, const PieceCatalog& catalog,
                               const GroundTruth& truth, PuzzleType type) {
  if (truth.empty()) return 0.0;
  int best = 0;
  for (const auto& comp : components) {
    std::vector<Cell> cells;
    for (const auto& m : comp.members) {
      cells.push_back({m.dy, m.dx, catalog.physical(m.piece), catalog.rotation(m.piece)});
    }
    best = std::max(best, largest_connected(cells, truth, type));
  }
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

bool perfect_score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type) {
  return !truth.empty() &&
         best_direct_count(assembly, truth, type, FramePolicy::kBestOfFour) == static_cast<int>(truth.size());
}

ScoreReport score(const Assembly& assembly, const GroundTruth& truth, PuzzleType type, FramePolicy policy) {
  ScoreReport r;
  r.direct = direct_score(assembly, truth, type, policy);
  r.neighbor = neighbor_score(assembly, truth, type);
  r.largest_component = largest_component_score(assembly, truth, type);
  r.perfect = perfect_score(assembly, truth, type);
  return r;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        fields.back() += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  return fields;
}

}  // namespace

std::string report_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  for (std::size_t k = 0; k < kReportColumns.size(); ++k) out << (k ? "," : "") << kReportColumns[k];
  out << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.image) << ',' << r.type << ',' << r.variant << ',' << number(r.direct) << ','
        << number(r.neighbor) << ',' << number(r.largest) << ',' << (r.perfect ? "true" : "false") << ','
        << r.iterations << ',' << number(r.seconds) << '\n';
  }
  return out.str();
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != kReportColumns) {
    throw DataError("report CSV header does not match the expected columns");
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != kReportColumns.size()) throw DataError("report CSV row has the wrong number of fields");
    try {
      ReportRow r;
      r.image = f[0];
      r.type = f[1];
      r.variant = f[2];
      r.direct = std::stod(f[3]);
      r.neighbor = std::stod(f[4]);
      r.largest = std::stod(f[5]);
      if (f[6] != "true" && f[6] != "false") throw DataError("perfect must be true or false");
      r.perfect = f[6] == "true";
      r.iterations = std::stoi(f[7]);
      r.seconds = std::stod(f[8]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError("report CSV row has a malformed number");
    }
  }
  return rows;
}

std::string report_json(std::span<const ReportRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"image", r.image},
                   {"type", r.type},
                   {"variant", r.variant},
                   {"direct", r.direct},
                   {"neighbor", r.neighbor},
                   {"largest", r.largest},
                   {"perfect", r.perfect},
                   {"iterations", r.iterations},
                   {"seconds", r.seconds}});
  }
  return arr.dump(1);
}

}  // namespace lpjigsaw
