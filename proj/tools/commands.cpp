#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "lpjigsaw/errors.hpp"
#include "lpjigsaw/image.hpp"
#include "lpjigsaw/postprocess.hpp"

namespace lpjigsaw::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t rotation_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }
std::uint64_t noise_seed(std::uint64_t seed) { return seed ^ 0xc2b2ae3d27d4eb4fULL; }

PuzzleBundle make_bundle(const fs::path& image_path, int piece_px, PuzzleType type, std::uint64_t seed,
                         double noise_sigma, bool crop) {
  Image image = read_image(image_path);
  if (crop) image = center_crop(image, piece_px);
  PuzzleBundle bundle = slice(image, piece_px, seed);
  if (type == PuzzleType::kType2) bundle = scramble_type2(bundle, rotation_seed(seed));
  if (noise_sigma > 0.0) bundle = add_noise(bundle, noise_sigma, noise_seed(seed));
  return bundle;
}

namespace {

// Flags from a JSON object; nested objects name subcommands.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::FileError("writing JSON configs is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::FileError(std::string("malformed JSON config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
      std::ostringstream s;
      s << std::setprecision(17) << v.get<double>();
      return s.str();
    }
    throw CLI::ConversionError("unsupported JSON config value " + v.dump());
  }

  static void walk(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    if (!j.is_object()) throw CLI::ConversionError("JSON config sections must be objects");
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        walk(value, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

std::optional<std::string> config_argument(int argc, const char* const* argv) {
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--config" && k + 1 < argc) return std::string(argv[k + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct SolveOptions {
  std::string variant = "hybrid";
  int max_iters = 10;
  double reject_tol = 1e-5;
  double anchor_coord = 1e4;
  bool weights_initial = false;
  std::string anchor_policy = "best-match";
  unsigned threads = 0;

  VariantConfig config() const {
    VariantConfig cfg;
    cfg.mode = variant_from_string(variant);
    cfg.max_iters = max_iters;
    cfg.reject_tol = reject_tol;
    cfg.type2_anchor_coord = anchor_coord;
    cfg.weights_from_initial_universe = weights_initial;
    cfg.anchor_policy = anchor_policy == "best-aggregate" ? AnchorPolicy::kBestAggregate : AnchorPolicy::kBestMatch;
    return cfg;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--variant", variant, "Loop variant")
        ->check(CLI::IsMember({"free", "constrained", "hybrid"}))
        ->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Maximum LP rounds")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--reject-tol", reject_tol, "Residual above which a match is rejected")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--anchor-coord", anchor_coord, "Type 2 anchor coordinate magnitude")->capture_default_str();
    cmd->add_flag("--weights-initial", weights_initial, "Compute confidence weights over the initial universe only");
    cmd->add_option("--anchor-policy", anchor_policy, "Type 2 anchor choice")
        ->check(CLI::IsMember({"best-match", "best-aggregate"}))
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Distance-table worker threads (0: hardware)")->capture_default_str();
  }
};

struct SolveOutcome {
  PreparedPuzzle puzzle;
  SolverState state;
  Assembly assembly;
  double seconds = 0.0;
  bool cache_hit = false;
};

SolveOutcome solve_bundle(const PuzzleBundle& bundle, const SolveOptions& opts, const fs::path& cache,
                          std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<DistanceTable> table;
  bool hit = false;
  if (!cache.empty() && fs::exists(cache)) {
    try {
      table = DistanceTable::load(cache);
      const int expected = bundle.spec.piece_count() * (bundle.type == PuzzleType::kType2 ? 4 : 1);
      if (table->size() != expected || table->piece_px() != bundle.spec.piece_px) {
        err << "warning: distance cache " << cache << " does not match the bundle; rebuilding\n";
        table.reset();
      } else {
        hit = true;
      }
    } catch (const Error& e) {
      err << "warning: unreadable distance cache " << cache << " (" << e.what() << "); rebuilding\n";
      table.reset();
    }
  }
  SolveOutcome out{prepare(bundle, std::move(table), opts.threads), {}, {}, 0.0, hit};
  if (!cache.empty() && !hit) out.puzzle.table.save(cache);
  out.state = solve(out.puzzle, opts.config());
  out.assembly = complete_assembly(out.state, out.puzzle);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---- scramble ---------------------------------------------------------------

struct ScrambleArgs {
  std::string image;
  std::string out_dir;
  int piece_px = 28;
  int type = 1;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  bool crop = false;
};

int cmd_scramble(const ScrambleArgs& a, std::ostream& out) {
  const PuzzleType type = a.type == 2 ? PuzzleType::kType2 : PuzzleType::kType1;
  const PuzzleBundle bundle = make_bundle(a.image, a.piece_px, type, a.seed, a.noise_sigma, a.crop);
  save_bundle(bundle, a.out_dir);
  out << "bundle " << a.out_dir << ": " << bundle.spec.rows << " rows x " << bundle.spec.cols << " cols, "
      << bundle.spec.piece_count() << " pieces of " << bundle.spec.piece_px << " px, " << to_string(bundle.type)
      << ", seed " << bundle.seed << ", noise sigma " << bundle.noise_sigma << '\n';
  return kOk;
}

// ---- solve --------------------------------------------------------------------

struct SolveArgs {
  std::string bundle;
  std::string out_dir;
  std::string trace;
  std::string cache;
  SolveOptions opts;
};

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  const PuzzleBundle bundle = load_bundle(a.bundle);
  const fs::path out_dir = a.out_dir.empty() ? fs::path(a.bundle) : fs::path(a.out_dir);
  fs::create_directories(out_dir);
  const SolveOutcome r = solve_bundle(bundle, a.opts, a.cache, err);

  write_text(out_dir / "assembly.json", assembly_to_json(r.assembly));
  write_png(out_dir / "assembled.png", render(r.assembly, bundle.pieces, bundle.spec.piece_px));
  write_text(a.trace.empty() ? out_dir / "trace.jsonl" : fs::path(a.trace), trace_jsonl(r.state));

  json summary = {{"type", to_string(bundle.type)},
                  {"requested_variant", a.opts.variant},
                  {"variant", to_string(r.state.variant)},
                  {"iterations", r.state.k},
                  {"converged", r.state.converged},
                  {"l0_cost", r.state.l0_cost},
                  {"lp_objective", r.state.placement.objective},
                  {"seconds", r.seconds},
                  {"distance_cache_hit", r.cache_hit}};
  if (r.state.free_cost) summary["free_l0_cost"] = *r.state.free_cost;
  if (r.state.constrained_cost) summary["constrained_l0_cost"] = *r.state.constrained_cost;
  write_text(out_dir / "solve.json", summary.dump(1));

  if (!a.cache.empty()) out << "distance cache: " << (r.cache_hit ? "hit" : "written") << ' ' << a.cache << '\n';
  out << "solved " << bundle.spec.piece_count() << " pieces in " << r.state.k << " round(s)"
      << (r.state.converged ? "" : " without converging") << ", variant " << to_string(r.state.variant);
  if (r.state.free_cost && r.state.constrained_cost) {
    out << " (free cost " << *r.state.free_cost << ", constrained cost " << *r.state.constrained_cost << ")";
  }
  out << ", " << std::fixed << std::setprecision(2) << r.seconds << " s\n";
  return kOk;
}

// ---- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string bundle;
  std::string assembly;
  std::string report;
  std::string image;
  bool strict_frame = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const fs::path dir(a.bundle);
  if (!fs::exists(dir / "truth.json")) throw DataError("no truth.json in " + dir.string());
  const GroundTruth truth = load_truth(dir);
  const PuzzleBundle bundle = load_bundle(dir);
  const fs::path assembly_path = a.assembly.empty() ? dir / "assembly.json" : fs::path(a.assembly);
  const Assembly assembly = assembly_from_json(read_text(assembly_path));
  const ScoreReport s =
      score(assembly, truth, bundle.type, a.strict_frame ? FramePolicy::kStrict : FramePolicy::kBestOfFour);

  ReportRow row;
  row.image = a.image.empty() ? dir.filename().string() : a.image;
  row.type = to_string(bundle.type);
  row.direct = s.direct;
  row.neighbor = s.neighbor;
  row.largest = s.largest_component;
  row.perfect = s.perfect;
  const fs::path summary_path = assembly_path.parent_path() / "solve.json";
  if (fs::exists(summary_path)) {
    const json summary = json::parse(read_text(summary_path), nullptr, false);
    if (!summary.is_discarded()) {
      row.variant = summary.value("variant", std::string());
      row.iterations = summary.value("iterations", 0);
      row.seconds = summary.value("seconds", 0.0);
    }
  }
  const std::vector<ReportRow> rows = {row};
  if (!a.report.empty()) {
    const fs::path p(a.report);
    write_text(p, p.extension() == ".csv" ? report_csv(rows) : report_json(rows));
  }
  out << report_json(rows) << '\n';
  return kOk;
}

// ---- bench --------------------------------------------------------------------

struct BenchArgs {
  std::string image_dir;
  int type = 1;
  int piece_px = 28;
  bool crop = false;
  std::vector<double> noise_grid = {0.0};
  int runs = 5;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out_csv;
  std::string out_json;
  SolveOptions opts;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(a.image_dir)) {
    if (e.is_regular_file()) images.push_back(e.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw DataError("no images in " + a.image_dir);
  const PuzzleType type = a.type == 2 ? PuzzleType::kType2 : PuzzleType::kType1;

  std::vector<BenchRow> rows;
  std::vector<std::string> failed;
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    SolveOptions opts = a.opts;
    opts.threads = 1;
    for (;;) {
      fs::path image;
      {
        std::lock_guard lock(mu);
        if (next >= images.size()) return;
        image = images[next++];
      }
      std::vector<BenchRow> mine;
      try {
        for (double sigma : a.noise_grid) {
          for (int run = 0; run < a.runs; ++run) {
            const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(run);
            PuzzleBundle bundle = make_bundle(image, a.piece_px, type, seed, sigma, a.crop);
            const GroundTruth truth = *bundle.truth;
            bundle.truth.reset();
            std::ostringstream quiet;
            const SolveOutcome r = solve_bundle(bundle, opts, {}, quiet);
            const ScoreReport s = score(r.assembly, truth, type);
            mine.push_back({"run", image.filename().string(), sigma, run,
                            ReportRow{image.filename().string(), to_string(type), to_string(r.state.variant), s.direct,
                                      s.neighbor, s.largest_component, s.perfect, r.state.k, r.seconds}});
          }
        }
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        err << "warning: skipping " << image << ": " << e.what() << '\n';
        failed.push_back(image.string());
        continue;
      }
      std::lock_guard lock(mu);
      rows.insert(rows.end(), mine.begin(), mine.end());
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(images.size())));
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  }
  if (rows.empty()) throw DataError("every image failed");

  std::sort(rows.begin(), rows.end(), [](const BenchRow& x, const BenchRow& y) {
    return std::tie(x.image, x.sigma, x.run) < std::tie(y.image, y.sigma, y.run);
  });
  std::vector<BenchRow> all = rows;
  std::map<std::pair<std::string, double>, std::vector<const BenchRow*>> cells;
  for (const auto& r : rows) cells[{r.image, r.sigma}].push_back(&r);
  for (const auto& [key, members] : cells) {
    BenchRow mean{"mean", key.first, key.second, -1, {}};
    mean.report.image = key.first;
    mean.report.type = members.front()->report.type;
    mean.report.variant = a.opts.variant;
    const double count = static_cast<double>(members.size());
    int perfect = 0;
    double iterations = 0.0;
    for (const BenchRow* m : members) {
      mean.report.direct += m->report.direct / count;
      mean.report.neighbor += m->report.neighbor / count;
      mean.report.largest += m->report.largest / count;
      mean.report.seconds += m->report.seconds / count;
      iterations += m->report.iterations / count;
      perfect += m->report.perfect ? 1 : 0;
    }
    mean.report.iterations = static_cast<int>(std::lround(iterations));
    mean.report.perfect = perfect == static_cast<int>(members.size());
    all.push_back(mean);
  }

  const std::string csv = bench_csv(all);
  if (!a.out_csv.empty()) {
    write_text(a.out_csv, csv);
  } else {
    out << csv;
  }
  if (!a.out_json.empty()) {
    std::vector<ReportRow> reports;
    for (const auto& r : all) reports.push_back(r.report);
    write_text(a.out_json, report_json(reports));
  }
  out << "bench: " << rows.size() << " runs over " << cells.size() << " image/sigma cells";
  if (!failed.empty()) out << ", " << failed.size() << " image(s) skipped";
  out << '\n';
  return kOk;
}

}  // namespace

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "kind,image,sigma,run,type,variant,direct,neighbor,largest,perfect,iterations,seconds\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.kind << ',' << r.image << ',' << r.sigma << ',' << r.run << ',' << r.report.type << ','
        << r.report.variant << ',' << r.report.direct << ',' << r.report.neighbor << ',' << r.report.largest << ','
        << (r.report.perfect ? "true" : "false") << ',' << r.report.iterations << ',' << r.report.seconds << '\n';
  }
  return out.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Square-piece jigsaw puzzle solver based on successive weighted-L1 linear programs", "lpjigsaw"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read flags from a TOML or JSON file (flags on the command line win)");
  if (const auto cfg = config_argument(argc, argv); cfg && fs::path(*cfg).extension() == ".json") {
    app.config_formatter(std::make_shared<JsonConfig>());
  }

  ScrambleArgs scramble;
  auto* sc = app.add_subcommand("scramble", "Cut an image into a scrambled puzzle bundle");
  sc->add_option("image", scramble.image, "Input PNG or PPM image")->required();
  sc->add_option("out", scramble.out_dir, "Bundle directory to write")->required();
  sc->add_option("--piece-px", scramble.piece_px, "Piece side in pixels")->check(CLI::Range(2, 1 << 16))
      ->capture_default_str();
  sc->add_option("--type", scramble.type, "Puzzle type")->check(CLI::IsMember({1, 2}))->capture_default_str();
  sc->add_option("--seed", scramble.seed, "Scramble seed")->capture_default_str();
  sc->add_option("--noise-sigma", scramble.noise_sigma, "Gaussian noise on the 0-65535 scale")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sc->add_flag("--crop", scramble.crop, "Center-crop to a multiple of the piece size");

  SolveArgs solve_args;
  auto* so = app.add_subcommand("solve", "Solve a bundle (never reads truth.json)");
  so->add_option("bundle", solve_args.bundle, "Bundle directory")->required();
  so->add_option("--out", solve_args.out_dir, "Output directory (default: the bundle directory)");
  so->add_option("--trace", solve_args.trace, "Iteration trace path (default: <out>/trace.jsonl)");
  so->add_option("--cache-distances", solve_args.cache, "Distance table cache file, reused when it matches");
  solve_args.opts.add_to(so);

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Score an assembly against the bundle's truth.json");
  ev->add_option("bundle", eval.bundle, "Bundle directory")->required();
  ev->add_option("--assembly", eval.assembly, "Assembly JSON (default: <bundle>/assembly.json)");
  ev->add_option("--report", eval.report, "Write the report here (.json or .csv)");
  ev->add_option("--image", eval.image, "Image name for the report (default: bundle directory name)");
  ev->add_flag("--strict-frame", eval.strict_frame, "Type 2: score in the original frame only");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Scramble, solve and score every image of a directory");
  be->add_option("images", bench.image_dir, "Directory of images")->required()->check(CLI::ExistingDirectory);
  be->add_option("--type", bench.type, "Puzzle type")->check(CLI::IsMember({1, 2}))->capture_default_str();
  be->add_option("--piece-px", bench.piece_px, "Piece side in pixels")->capture_default_str();
  be->add_flag("--crop", bench.crop, "Center-crop images to a multiple of the piece size");
  be->add_option("--noise-grid", bench.noise_grid, "Noise sigmas")->delimiter(',')->capture_default_str();
  be->add_option("--runs", bench.runs, "Seeded runs per image and sigma")->check(CLI::PositiveNumber)
      ->capture_default_str();
  be->add_option("--seeds", bench.seed, "First seed; run r uses seed + r")->capture_default_str();
  be->add_option("--jobs", bench.jobs, "Images solved concurrently")->check(CLI::PositiveNumber)
      ->capture_default_str();
  be->add_option("--out", bench.out_csv, "CSV output (default: stdout)");
  be->add_option("--json", bench.out_json, "Also write the rows as JSON");
  bench.opts.add_to(be);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (sc->parsed()) return cmd_scramble(scramble, out);
    if (so->parsed()) return cmd_solve(solve_args, out, err);
    if (ev->parsed()) return cmd_eval(eval, out);
    if (be->parsed()) return cmd_bench(bench, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace lpjigsaw::cli
