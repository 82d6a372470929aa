// Command-line front end: build shape sets and banks, run episodes and
// experiments, re-render reports. Every command writes a RunManifest that is
// enough to reproduce its outputs byte-for-byte.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "tactile/bank.hpp"
#include "tactile/digest.hpp"
#include "tactile/geometry.hpp"
#include "tactile/harness.hpp"
#include "tactile/manifest.hpp"
#include "tactile/similarity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tactile;

namespace {

int log_level() {
  static const int lvl = [] {
    const char* e = std::getenv("TF_LOG");
    if (!e) return 1;
    const std::string s(e);
    if (s == "debug") return 3;
    if (s == "info") return 2;
    if (s == "quiet" || s == "off") return 0;
    return 1;
  }();
  return lvl;
}

void log_info(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[tactile] " << msg << std::endl;
}

struct Common {
  std::string workdir = ".";
  std::string config_path;
  std::string manifest_path;
  std::string out;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Common& c, const char* default_out) {
  c.out = default_out;
  cmd->add_option("--workdir", c.workdir, "Base directory for every path");
  cmd->add_option("--config", c.config_path, "JSON config file; explicit flags win");
  cmd->add_option("--from-manifest", c.manifest_path,
                  "Reload the config of a previous run's RunManifest");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--jobs", c.jobs, "Worker threads (0 = library default)");
}

fs::path resolve_path(const Common& c, const std::string& p) {
  const fs::path fp(p);
  return fp.is_absolute() ? fp : fs::path(c.workdir) / fp;
}

// Defaults < manifest config < config file < explicit flags. The bag holds
// the middle two layers; pick() applies the flag layer.
json build_bag(const Common& c, const std::string& command) {
  json bag = json::object();
  if (!c.manifest_path.empty()) {
    const RunManifest m = load_manifest(resolve_path(c, c.manifest_path).string());
    if (m.command != command) {
      throw std::runtime_error("manifest records command \"" + m.command +
                               "\", not \"" + command + "\"");
    }
    bag.update(m.config);
  }
  if (!c.config_path.empty()) {
    std::ifstream in(resolve_path(c, c.config_path));
    if (!in) throw std::runtime_error("cannot open config: " + c.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed config " + c.config_path + ": " + e.what());
    }
    bag.update(j);
  }
  return bag;
}

template <typename T>
T pick(const CLI::App* cmd, const char* flag, const json& bag, const char* key,
       const T& cli_value) {
  if (cmd->count(flag) > 0) return cli_value;
  if (auto it = bag.find(key); it != bag.end() && !it->is_null()) return it->get<T>();
  return cli_value;
}

void apply_jobs(const Common& c) {
#ifdef _OPENMP
  if (c.jobs > 0) omp_set_num_threads(c.jobs);
#else
  (void)c;
#endif
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// ---- shapes ----------------------------------------------------------------

std::vector<std::string> parse_glyph_set(const std::string& set) {
  if (set == "all") return glyph_names();
  std::vector<std::string> names;
  if (set.size() == 3 && set[1] == '-') {
    for (char ch = set[0]; ch <= set[2]; ++ch) names.emplace_back(1, ch);
    return names;
  }
  if (set.find(',') != std::string::npos) {
    std::string cur;
    for (char ch : set) {
      if (ch == ',') {
        if (!cur.empty()) names.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    if (!cur.empty()) names.push_back(cur);
    return names;
  }
  for (char ch : set) names.emplace_back(1, ch);  // e.g. "MLTF"
  return names;
}

GlyphScale parse_scale(const std::string& scale) {
  if (scale == "small") return glyph_scale_small();
  if (scale == "large") return glyph_scale_large();
  const auto x = scale.find('x');
  if (x == std::string::npos) {
    throw std::invalid_argument("scale must be small, large, or WxH (e.g. 32x28)");
  }
  GlyphScale s;
  s.width_mm = std::stod(scale.substr(0, x));
  s.height_mm = std::stod(scale.substr(x + 1));
  return s;
}

int cmd_shapes_glyphs(const CLI::App* cmd, const Common& common, std::string set,
                      std::string scale) {
  const json bag = build_bag(common, "shapes glyphs");
  set = pick(cmd, "--set", bag, "set", set);
  scale = pick(cmd, "--scale", bag, "scale", scale);
  const std::string out = pick(cmd, "--out", bag, "out", common.out);

  const auto shapes = glyph_library(parse_glyph_set(set), parse_scale(scale));
  const fs::path outdir = resolve_path(common, out);
  fs::create_directories(outdir);

  RunManifest m;
  m.command = "shapes glyphs";
  m.config = json{{"set", set}, {"scale", scale}, {"out", out}};
  for (const ShapeSpec& s : shapes) {
    const std::string name = s.category_id + ".json";
    write_shape_json((outdir / name).string(), s);
    m.outputs.push_back((fs::path(out) / name).generic_string());
  }
  write_manifest((outdir / "run_manifest.json").string(), m);
  std::cout << "wrote " << shapes.size() << " shape files to " << out << "\n";
  return 0;
}

int cmd_shapes_maze(const CLI::App* cmd, const Common& common, uint64_t seed,
                    int walls, double perturb) {
  const json bag = build_bag(common, "shapes maze");
  seed = pick(cmd, "--seed", bag, "seed", seed);
  walls = pick(cmd, "--walls", bag, "walls", walls);
  perturb = pick(cmd, "--perturb", bag, "perturb", perturb);
  const std::string out = pick(cmd, "--out", bag, "out", common.out);

  MazeParams params;
  params.walls = walls;
  params.perturb_mm = perturb;
  const auto shapes = generate_maze_board(seed, params);
  const fs::path outdir = resolve_path(common, out);
  fs::create_directories(outdir);

  RunManifest m;
  m.command = "shapes maze";
  m.config = json{{"seed", seed}, {"walls", walls}, {"perturb", perturb}, {"out", out}};
  m.seed = seed;
  for (const ShapeSpec& s : shapes) {
    const std::string name = s.category_id + ".json";
    write_shape_json((outdir / name).string(), s);
    m.outputs.push_back((fs::path(out) / name).generic_string());
  }
  write_manifest((outdir / "run_manifest.json").string(), m);
  std::cout << "wrote " << shapes.size() << " maze wall files to " << out << "\n";
  return 0;
}

// ---- bank ------------------------------------------------------------------

GridKind parse_grid(const std::string& name) {
  if (name == "small") return GridKind::kSmall;
  if (name == "large") return GridKind::kLarge;
  throw std::invalid_argument("grid must be small or large");
}

std::vector<ShapeSpec> read_shapes_dir(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("shapes dir not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().filename() != "run_manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no shape files in " + dir.string());
  std::vector<ShapeSpec> shapes;
  shapes.reserve(files.size());
  for (const fs::path& f : files) shapes.push_back(read_shape_json(f.string()));
  return shapes;
}

int cmd_bank(const CLI::App* cmd, const Common& common, std::string board,
             std::string shapes_dir, std::string grid_name) {
  const json bag = build_bag(common, "bank");
  board = pick(cmd, "--board", bag, "board", board);
  shapes_dir = pick(cmd, "--shapes-dir", bag, "shapes_dir", shapes_dir);
  grid_name = pick(cmd, "--grid", bag, "grid", grid_name);
  const std::string out = pick(cmd, "--out", bag, "out", common.out);
  apply_jobs(common);

  if (board.empty() == shapes_dir.empty())
    throw std::runtime_error("pass exactly one of --board or --shapes-dir");

  std::vector<ShapeSpec> shapes;
  PoseGrid grid;
  SensorWindow window;
  RunManifest m;
  m.command = "bank";
  if (!board.empty()) {
    Board b = make_board(parse_grid(board));
    shapes = std::move(b.shapes);
    grid = b.grid;
    window = b.window;
    // An explicit --grid overrides the board's preset; otherwise record the
    // grid actually used so a manifest re-run rebuilds the same bank.
    if (cmd->count("--grid") > 0 || bag.contains("grid")) {
      grid = make_pose_grid(parse_grid(grid_name));
    } else {
      grid_name = board;
    }
  } else {
    shapes = read_shapes_dir(resolve_path(common, shapes_dir));
    grid = make_pose_grid(parse_grid(grid_name));
    m.inputs.push_back(
        {shapes_dir, input_digest(resolve_path(common, shapes_dir).string())});
  }

  const fs::path outdir = resolve_path(common, out);
  if (fs::exists(outdir / "manifest.json")) {
    // Refuse to overwrite a bank collected with different geometry.
    std::ifstream in(outdir / "manifest.json");
    json j;
    in >> j;
    PoseGrid old_grid;
    old_grid.x_values = j.at("grid").at("x").get<std::vector<double>>();
    old_grid.y_values = j.at("grid").at("y").get<std::vector<double>>();
    old_grid.theta_values = j.at("grid").at("theta").get<std::vector<double>>();
    const bool same_grid = old_grid.x_values == grid.x_values &&
                           old_grid.y_values == grid.y_values &&
                           old_grid.theta_values == grid.theta_values;
    const bool same_window =
        j.at("window").at("width_mm").get<double>() == window.width_mm &&
        j.at("window").at("height_mm").get<double>() == window.height_mm &&
        j.at("window").at("cols").get<int>() == window.cols &&
        j.at("window").at("rows").get<int>() == window.rows;
    if (!same_grid || !same_window)
      throw std::runtime_error("existing bank at " + out +
                               " was collected with a different grid/resolution");
  }

  log_info("rasterizing " + std::to_string(shapes.size() * grid.size()) + " entries");
  const PegImageBank bank = build_bank(shapes, grid, window);
  fs::create_directories(outdir);
  save_bank(outdir.string(), bank, shapes);

  m.config = json{{"board", board},
                  {"shapes_dir", shapes_dir},
                  {"grid", grid_name},
                  {"out", out}};
  m.outputs.push_back((fs::path(out) / "manifest.json").generic_string());
  write_manifest((outdir / "run_manifest.json").string(), m);
  std::cout << "bank with " << bank.entry_count() << " entries ("
            << bank.categories.size() << " categories x " << grid.size()
            << " poses) -> " << out << "\n";
  return 0;
}

// ---- run / experiment / ablate ----------------------------------------------

struct FilterFlags {
  int k = 100;
  int n_max = 10;
  double delta_prob = 0.95;
  double delta_act = 0.0;
  std::string resample = "systematic";
  double jitter = 0.0;
  double max_step_mm = 0.0;   // <= 0 means unbounded
  double max_step_deg = 0.0;  // <= 0 means unbounded
};

struct NoiseFlags {
  double flip_prob = 0.0;
  double blur_radius = 0.0;
  double jitter_xy = 0.0;
  double jitter_theta = 0.0;
};

struct OracleFlags {
  double epsilon = 1e-6;
  double sharpness = 128.0;
};

void add_filter_flags(CLI::App* cmd, FilterFlags& f) {
  cmd->add_option("--K", f.k, "Particle count");
  cmd->add_option("--n-max", f.n_max, "Touch budget per episode");
  cmd->add_option("--delta-prob", f.delta_prob, "Termination threshold");
  cmd->add_option("--delta-act", f.delta_act, "Contact threshold (0 = bank default)");
  cmd->add_option("--resample", f.resample, "systematic|multinomial");
  cmd->add_option("--jitter", f.jitter, "Grid-neighbor hop probability after resampling");
  cmd->add_option("--max-step-mm", f.max_step_mm, "Per-step translation cap (<=0 = unbounded)");
  cmd->add_option("--max-step-deg", f.max_step_deg, "Per-step rotation cap (<=0 = unbounded)");
}

void add_noise_flags(CLI::App* cmd, NoiseFlags& n) {
  cmd->add_option("--flip-prob", n.flip_prob, "Per-cell flip probability");
  cmd->add_option("--blur-radius", n.blur_radius, "Box blur radius, pixels");
  cmd->add_option("--jitter-xy", n.jitter_xy, "Pose jitter sigma, mm");
  cmd->add_option("--jitter-theta", n.jitter_theta, "Pose jitter sigma, degrees");
}

void add_oracle_flags(CLI::App* cmd, OracleFlags& o) {
  cmd->add_option("--epsilon", o.epsilon, "Similarity score floor");
  cmd->add_option("--sharpness", o.sharpness, "Similarity agreement exponent");
}

FilterFlags pick_filter(const CLI::App* cmd, const json& bag, const FilterFlags& f) {
  FilterFlags out;
  out.k = pick(cmd, "--K", bag, "K", f.k);
  out.n_max = pick(cmd, "--n-max", bag, "n_max", f.n_max);
  out.delta_prob = pick(cmd, "--delta-prob", bag, "delta_prob", f.delta_prob);
  out.delta_act = pick(cmd, "--delta-act", bag, "delta_act", f.delta_act);
  out.resample = pick(cmd, "--resample", bag, "resample", f.resample);
  out.jitter = pick(cmd, "--jitter", bag, "jitter", f.jitter);
  out.max_step_mm = pick(cmd, "--max-step-mm", bag, "max_step_mm", f.max_step_mm);
  out.max_step_deg = pick(cmd, "--max-step-deg", bag, "max_step_deg", f.max_step_deg);
  return out;
}

NoiseFlags pick_noise(const CLI::App* cmd, const json& bag, const NoiseFlags& n) {
  NoiseFlags out;
  out.flip_prob = pick(cmd, "--flip-prob", bag, "flip_prob", n.flip_prob);
  out.blur_radius = pick(cmd, "--blur-radius", bag, "blur_radius", n.blur_radius);
  out.jitter_xy = pick(cmd, "--jitter-xy", bag, "jitter_xy", n.jitter_xy);
  out.jitter_theta = pick(cmd, "--jitter-theta", bag, "jitter_theta", n.jitter_theta);
  return out;
}

OracleFlags pick_oracle(const CLI::App* cmd, const json& bag, const OracleFlags& o) {
  OracleFlags out;
  out.epsilon = pick(cmd, "--epsilon", bag, "epsilon", o.epsilon);
  out.sharpness = pick(cmd, "--sharpness", bag, "sharpness", o.sharpness);
  return out;
}

FilterConfig to_filter_config(const FilterFlags& f) {
  json j{{"K", f.k},
         {"n_max", f.n_max},
         {"delta_prob", f.delta_prob},
         {"delta_act", f.delta_act},
         {"resample", f.resample},
         {"jitter", f.jitter}};
  if (f.max_step_mm > 0.0) j["max_step_mm"] = f.max_step_mm;
  if (f.max_step_deg > 0.0) j["max_step_deg"] = f.max_step_deg;
  FilterConfig cfg = j.get<FilterConfig>();
  cfg.validate();
  return cfg;
}

NoiseModel to_noise_model(const NoiseFlags& n) {
  NoiseModel m;
  m.flip_prob = n.flip_prob;
  m.blur_radius = n.blur_radius;
  m.jitter_x_mm = n.jitter_xy;
  m.jitter_y_mm = n.jitter_xy;
  m.jitter_theta_deg = n.jitter_theta;
  m.validate();
  return m;
}

json filter_bag(const FilterFlags& f) {
  return json{{"K", f.k},
              {"n_max", f.n_max},
              {"delta_prob", f.delta_prob},
              {"delta_act", f.delta_act},
              {"resample", f.resample},
              {"jitter", f.jitter},
              {"max_step_mm", f.max_step_mm},
              {"max_step_deg", f.max_step_deg}};
}

json noise_bag(const NoiseFlags& n) {
  return json{{"flip_prob", n.flip_prob},
              {"blur_radius", n.blur_radius},
              {"jitter_xy", n.jitter_xy},
              {"jitter_theta", n.jitter_theta}};
}

json oracle_bag(const OracleFlags& o) {
  return json{{"epsilon", o.epsilon}, {"sharpness", o.sharpness}};
}

std::optional<double> margin_from(double plate_margin) {
  if (plate_margin < 0.0) return std::nullopt;
  return plate_margin;
}

size_t resolve_category(const LoadedBank& lb, const std::string& category) {
  for (size_t i = 0; i < lb.bank.categories.size(); ++i) {
    if (lb.bank.categories[i] == category) return i;
  }
  try {
    const size_t idx = std::stoul(category);
    if (idx < lb.bank.categories.size()) return idx;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("unknown category \"" + category + "\"");
}

size_t resolve_pose(const PoseGrid& grid, const std::string& pose_text,
                    size_t pose_index) {
  if (pose_text.empty()) {
    if (pose_index >= grid.size()) throw std::runtime_error("pose index out of range");
    return pose_index;
  }
  double x = 0, y = 0, t = 0;
  if (std::sscanf(pose_text.c_str(), "%lf,%lf,%lf", &x, &y, &t) != 3)
    throw std::runtime_error("pose must be \"x,y,theta\"");
  for (size_t i = 0; i < grid.size(); ++i) {
    const Pose2D p = grid.pose_at(i);
    if (std::abs(p.x - x) < 1e-9 && std::abs(p.y - y) < 1e-9 &&
        std::abs(wrap_degrees(p.theta - t)) < 1e-9) {
      return i;
    }
  }
  throw std::runtime_error("pose " + pose_text + " is not on the bank's grid");
}

json episode_json(const EpisodeResult& r) {
  return json{{"gt_category", r.gt_category},
              {"gt_pose_index", r.gt_pose_index},
              {"predicted_category", r.predicted_category},
              {"predicted_pose_index", r.predicted_pose_index},
              {"predicted_pose", json{{"x", r.predicted_pose.x},
                                      {"y", r.predicted_pose.y},
                                      {"theta", r.predicted_pose.theta}}},
              {"touches_used", r.touches_used},
              {"terminated_early", r.terminated_early},
              {"err_xy", r.err_xy},
              {"err_theta", r.err_theta},
              {"posteriors", r.posteriors}};
}

int cmd_run(const CLI::App* cmd, const Common& common, std::string bank_dir,
            std::string category, std::string pose_text, size_t pose_index,
            std::string policy, const FilterFlags& ff, const NoiseFlags& nf,
            const OracleFlags& orf, uint64_t seed, double plate_margin) {
  const json bag = build_bag(common, "run");
  bank_dir = pick(cmd, "--bank", bag, "bank", bank_dir);
  category = pick(cmd, "--category", bag, "category", category);
  pose_text = pick(cmd, "--pose", bag, "pose", pose_text);
  pose_index = pick(cmd, "--pose-index", bag, "pose_index", pose_index);
  policy = pick(cmd, "--policy", bag, "policy", policy);
  seed = pick(cmd, "--seed", bag, "seed", seed);
  plate_margin = pick(cmd, "--plate-margin", bag, "plate_margin", plate_margin);
  const FilterFlags f = pick_filter(cmd, bag, ff);
  const NoiseFlags n = pick_noise(cmd, bag, nf);
  const OracleFlags o = pick_oracle(cmd, bag, orf);
  const std::string out = pick(cmd, "--out", bag, "out", common.out);
  apply_jobs(common);
  if (bank_dir.empty()) throw std::runtime_error("--bank is required");

  const LoadedBank lb = load_bank(resolve_path(common, bank_dir).string());
  EpisodeConfig ec;
  ec.gt_category = resolve_category(lb, category);
  ec.gt_pose_index = resolve_pose(lb.bank.grid, pose_text, pose_index);
  ec.policy = parse_policy(policy);
  ec.filter = to_filter_config(f);
  ec.noise = to_noise_model(n);
  ec.seed = seed;
  ec.plate_margin_mm = margin_from(plate_margin);

  const fs::path outdir = resolve_path(common, out);
  fs::create_directories(outdir);
  std::ofstream transcript(outdir / "transcript.jsonl", std::ios::binary);
  if (!transcript)
    throw std::runtime_error("cannot write " + (outdir / "transcript.jsonl").string());

  const GeometricOracle model(o.epsilon, o.sharpness);
  EpisodeResult r = run_episode(ec, lb.bank, lb.shapes, model, &transcript);
  transcript.close();
  write_text(outdir / "result.json", episode_json(r).dump(2) + "\n");

  RunManifest m;
  m.command = "run";
  m.seed = seed;
  m.config = json{{"bank", bank_dir},
                  {"category", category},
                  {"pose", pose_text},
                  {"pose_index", pose_index},
                  {"policy", policy},
                  {"seed", seed},
                  {"plate_margin", plate_margin},
                  {"out", out}};
  m.config.update(filter_bag(f));
  m.config.update(noise_bag(n));
  m.config.update(oracle_bag(o));
  m.inputs.push_back({bank_dir, input_digest(resolve_path(common, bank_dir).string())});
  m.outputs.push_back((fs::path(out) / "transcript.jsonl").generic_string());
  m.outputs.push_back((fs::path(out) / "result.json").generic_string());
  write_manifest((outdir / "run_manifest.json").string(), m);

  std::cout << "predicted " << lb.bank.categories[r.predicted_category] << " at ("
            << r.predicted_pose.x << ", " << r.predicted_pose.y << ", "
            << r.predicted_pose.theta << ") in " << r.touches_used << " touches"
            << (r.terminated_early ? "" : " (budget exhausted)") << "\n";
  return 0;
}

std::string csv_num(double v) { return json(v).dump(); }

void write_report_csv(const fs::path& path, const ExperimentReport& rep) {
  std::string csv = "n,accuracy_percent\n";
  for (size_t i = 0; i < rep.ns.size(); ++i) {
    csv += std::to_string(rep.ns[i]) + "," + csv_num(rep.accuracy_at[i]) + "\n";
  }
  write_text(path, csv);
}

void write_entropy_csv(const fs::path& path, const ExperimentReport& rep) {
  std::string csv = "t,mean_entropy\n";
  for (size_t i = 0; i < rep.mean_entropy.size(); ++i) {
    csv += std::to_string(i + 1) + "," + csv_num(rep.mean_entropy[i]) + "\n";
  }
  write_text(path, csv);
}

json report_json(const ExperimentReport& rep) {
  return json{{"episodes", rep.episodes},
              {"ns", rep.ns},
              {"accuracy_percent", rep.accuracy_at},
              {"mean_err_xy_mm", rep.mean_err_xy},
              {"mean_err_theta_deg", rep.mean_err_theta},
              {"mean_touches", rep.mean_touches},
              {"pose_exact_percent", rep.pose_exact_percent},
              {"confusion", rep.confusion},
              {"mean_entropy", rep.mean_entropy},
              {"seed", rep.seed},
              {"config_fingerprint", rep.config_fingerprint}};
}

int cmd_experiment(const CLI::App* cmd, const Common& common, std::string bank_dir,
                   std::string policy, const FilterFlags& ff, const NoiseFlags& nf,
                   const OracleFlags& orf, double subsample, bool full, int repeats,
                   uint64_t seed, double plate_margin) {
  const json bag = build_bag(common, "experiment");
  bank_dir = pick(cmd, "--bank", bag, "bank", bank_dir);
  policy = pick(cmd, "--policy", bag, "policy", policy);
  subsample = pick(cmd, "--subsample", bag, "subsample", subsample);
  full = pick(cmd, "--full", bag, "full", full);
  repeats = pick(cmd, "--repeats", bag, "repeats", repeats);
  seed = pick(cmd, "--seed", bag, "seed", seed);
  plate_margin = pick(cmd, "--plate-margin", bag, "plate_margin", plate_margin);
  const FilterFlags f = pick_filter(cmd, bag, ff);
  const NoiseFlags n = pick_noise(cmd, bag, nf);
  const OracleFlags o = pick_oracle(cmd, bag, orf);
  const std::string out = pick(cmd, "--out", bag, "out", common.out);
  apply_jobs(common);
  if (bank_dir.empty()) throw std::runtime_error("--bank is required");

  const LoadedBank lb = load_bank(resolve_path(common, bank_dir).string());
  ExperimentConfig ec;
  ec.policy = parse_policy(policy);
  ec.filter = to_filter_config(f);
  ec.noise = to_noise_model(n);
  ec.subsample = subsample;
  ec.full_sweep = full;
  ec.repeats = repeats;
  ec.seed = seed;
  ec.plate_margin_mm = margin_from(plate_margin);

  const GeometricOracle model(o.epsilon, o.sharpness);
  log_info("running " + std::string(full ? "full sweep" : "subsample") + " experiment");
  const ExperimentReport rep = run_experiment(ec, lb.bank, lb.shapes, model);

  const fs::path outdir = resolve_path(common, out);
  fs::create_directories(outdir);
  write_text(outdir / "report.json", report_json(rep).dump(2) + "\n");
  write_report_csv(outdir / "report.csv", rep);
  write_entropy_csv(outdir / "entropy.csv", rep);

  RunManifest m;
  m.command = "experiment";
  m.seed = seed;
  m.config = json{{"bank", bank_dir},   {"policy", policy}, {"subsample", subsample},
                  {"full", full},       {"repeats", repeats}, {"seed", seed},
                  {"plate_margin", plate_margin}, {"out", out}};
  m.config.update(filter_bag(f));
  m.config.update(noise_bag(n));
  m.config.update(oracle_bag(o));
  m.inputs.push_back({bank_dir, input_digest(resolve_path(common, bank_dir).string())});
  m.outputs.push_back((fs::path(out) / "report.json").generic_string());
  m.outputs.push_back((fs::path(out) / "report.csv").generic_string());
  m.outputs.push_back((fs::path(out) / "entropy.csv").generic_string());
  write_manifest((outdir / "run_manifest.json").string(), m);

  std::cout << rep.episodes << " episodes";
  for (size_t i = 0; i < rep.ns.size(); ++i) {
    std::cout << (i == 0 ? ": " : ", ") << "acc@" << rep.ns[i] << "="
              << rep.accuracy_at[i] << "%";
  }
  std::cout << ", mean touches " << rep.mean_touches << "\n";
  return 0;
}

json ablate_json(const AblateReport& rep) {
  return json{{"pairs", rep.pairs},
              {"ns", rep.ns},
              {"informed_acc", rep.informed_acc},
              {"random_acc", rep.random_acc},
              {"diff", rep.diff},
              {"ci_lo", rep.ci_lo},
              {"ci_hi", rep.ci_hi},
              {"informed_touches", rep.informed_touches},
              {"random_touches", rep.random_touches},
              {"touches_diff", rep.touches_diff},
              {"touches_ci_lo", rep.touches_ci_lo},
              {"touches_ci_hi", rep.touches_ci_hi},
              {"seed", rep.seed},
              {"config_fingerprint", rep.config_fingerprint}};
}

void write_ablate_csv(const fs::path& path, const AblateReport& rep) {
  std::string csv = "n,informed_percent,random_percent,diff,ci_lo,ci_hi\n";
  for (size_t i = 0; i < rep.ns.size(); ++i) {
    csv += std::to_string(rep.ns[i]) + "," + csv_num(rep.informed_acc[i]) + "," +
           csv_num(rep.random_acc[i]) + "," + csv_num(rep.diff[i]) + "," +
           csv_num(rep.ci_lo[i]) + "," + csv_num(rep.ci_hi[i]) + "\n";
  }
  csv += "touches," + csv_num(rep.informed_touches) + "," +
         csv_num(rep.random_touches) + "," + csv_num(rep.touches_diff) + "," +
         csv_num(rep.touches_ci_lo) + "," + csv_num(rep.touches_ci_hi) + "\n";
  write_text(path, csv);
}

int cmd_ablate(const CLI::App* cmd, const Common& common, std::string bank_dir,
               const FilterFlags& ff, const NoiseFlags& nf, const OracleFlags& orf,
               double subsample, int repeats, uint64_t seed, int bootstrap,
               double plate_margin) {
  const json bag = build_bag(common, "ablate");
  bank_dir = pick(cmd, "--bank", bag, "bank", bank_dir);
  subsample = pick(cmd, "--subsample", bag, "subsample", subsample);
  repeats = pick(cmd, "--repeats", bag, "repeats", repeats);
  seed = pick(cmd, "--seed", bag, "seed", seed);
  bootstrap = pick(cmd, "--bootstrap", bag, "bootstrap", bootstrap);
  plate_margin = pick(cmd, "--plate-margin", bag, "plate_margin", plate_margin);
  const FilterFlags f = pick_filter(cmd, bag, ff);
  const NoiseFlags n = pick_noise(cmd, bag, nf);
  const OracleFlags o = pick_oracle(cmd, bag, orf);
  const std::string out = pick(cmd, "--out", bag, "out", common.out);
  apply_jobs(common);
  if (bank_dir.empty()) throw std::runtime_error("--bank is required");

  const LoadedBank lb = load_bank(resolve_path(common, bank_dir).string());
  AblateConfig ac;
  ac.filter = to_filter_config(f);
  ac.noise = to_noise_model(n);
  ac.subsample = subsample;
  ac.repeats = repeats;
  ac.seed = seed;
  ac.bootstrap_rounds = bootstrap;
  ac.plate_margin_mm = margin_from(plate_margin);

  const GeometricOracle model(o.epsilon, o.sharpness);
  log_info("running paired informed/random comparison");
  const AblateReport rep = ablate_policies(ac, lb.bank, lb.shapes, model);

  const fs::path outdir = resolve_path(common, out);
  fs::create_directories(outdir);
  write_text(outdir / "ablate.json", ablate_json(rep).dump(2) + "\n");
  write_ablate_csv(outdir / "ablate.csv", rep);

  RunManifest m;
  m.command = "ablate";
  m.seed = seed;
  m.config = json{{"bank", bank_dir},     {"subsample", subsample},
                  {"repeats", repeats},   {"seed", seed},
                  {"bootstrap", bootstrap}, {"plate_margin", plate_margin},
                  {"out", out}};
  m.config.update(filter_bag(f));
  m.config.update(noise_bag(n));
  m.config.update(oracle_bag(o));
  m.inputs.push_back({bank_dir, input_digest(resolve_path(common, bank_dir).string())});
  m.outputs.push_back((fs::path(out) / "ablate.json").generic_string());
  m.outputs.push_back((fs::path(out) / "ablate.csv").generic_string());
  write_manifest((outdir / "run_manifest.json").string(), m);

  std::cout << rep.pairs << " paired episodes";
  for (size_t i = 0; i < rep.ns.size(); ++i) {
    std::cout << (i == 0 ? ": " : ", ") << "diff@" << rep.ns[i] << "=" << rep.diff[i]
              << "pp [" << rep.ci_lo[i] << ", " << rep.ci_hi[i] << "]";
  }
  std::cout << "\n";
  return 0;
}

int cmd_report(const CLI::App* cmd, const Common& common, std::string in_path,
               std::string csv_path, std::string entropy_path) {
  const json bag = build_bag(common, "report");
  in_path = pick(cmd, "--in", bag, "in", in_path);
  csv_path = pick(cmd, "--csv", bag, "csv", csv_path);
  entropy_path = pick(cmd, "--entropy-csv", bag, "entropy_csv", entropy_path);
  const std::string out = pick(cmd, "--out", bag, "out", common.out);
  if (in_path.empty()) throw std::runtime_error("--in is required");

  std::ifstream in(resolve_path(common, in_path));
  if (!in) throw std::runtime_error("cannot open report: " + in_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed report " + in_path + ": " + e.what());
  }

  RunManifest m;
  m.command = "report";
  m.config = json{{"in", in_path}, {"csv", csv_path}, {"entropy_csv", entropy_path},
                  {"out", out}};
  m.inputs.push_back({in_path, input_digest(resolve_path(common, in_path).string())});
  const fs::path outdir = resolve_path(common, out);
  fs::create_directories(outdir);

  if (j.contains("informed_acc")) {
    std::cout << "n  informed%  random%  diff  [95% CI]\n";
    const auto ns = j.at("ns").get<std::vector<int>>();
    for (size_t i = 0; i < ns.size(); ++i) {
      std::cout << ns[i] << "  " << j.at("informed_acc")[i].get<double>() << "  "
                << j.at("random_acc")[i].get<double>() << "  "
                << j.at("diff")[i].get<double>() << "  ["
                << j.at("ci_lo")[i].get<double>() << ", "
                << j.at("ci_hi")[i].get<double>() << "]\n";
    }
  } else {
    std::cout << "episodes: " << j.at("episodes").get<size_t>() << "\n";
    std::cout << "n  accuracy%\n";
    const auto ns = j.at("ns").get<std::vector<int>>();
    for (size_t i = 0; i < ns.size(); ++i) {
      std::cout << ns[i] << "  " << j.at("accuracy_percent")[i].get<double>() << "\n";
    }
    if (!csv_path.empty()) {
      ExperimentReport rep;
      rep.ns = ns;
      rep.accuracy_at = j.at("accuracy_percent").get<std::vector<double>>();
      write_report_csv(resolve_path(common, csv_path), rep);
      m.outputs.push_back(csv_path);
    }
    if (!entropy_path.empty()) {
      ExperimentReport rep;
      rep.mean_entropy = j.at("mean_entropy").get<std::vector<double>>();
      write_entropy_csv(resolve_path(common, entropy_path), rep);
      m.outputs.push_back(entropy_path);
    }
  }
  write_manifest((outdir / "run_manifest.json").string(), m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tactile peg identification: banks, episodes, experiments"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // shapes
  auto* shapes = app.add_subcommand("shapes", "Write shape JSON files");
  shapes->require_subcommand(1);
  auto* glyphs = shapes->add_subcommand("glyphs", "Built-in letterforms");
  Common glyphs_common;
  std::string glyphs_set = "A-L", glyphs_scale = "large";
  glyphs->add_option("--set", glyphs_set, "A-L, MLTF, all, or comma list");
  glyphs->add_option("--scale", glyphs_scale, "small, large, or WxH in mm");
  add_common(glyphs, glyphs_common, "shapes");

  auto* maze = shapes->add_subcommand("maze", "Seeded maze wall set");
  Common maze_common;
  uint64_t maze_seed = 0;
  int maze_walls = 24;
  double maze_perturb = 0.8;
  maze->add_option("--seed", maze_seed, "Maze seed");
  maze->add_option("--walls", maze_walls, "Wall count");
  maze->add_option("--perturb", maze_perturb, "Wall jitter, mm");
  add_common(maze, maze_common, "maze_shapes");

  // bank
  auto* bank = app.add_subcommand("bank", "Rasterize a peg image bank");
  Common bank_common;
  std::string bank_board, bank_shapes_dir, bank_grid = "small";
  bank->add_option("--board", bank_board, "Built-in board: small|large");
  bank->add_option("--shapes-dir", bank_shapes_dir, "Directory of shape JSON files");
  bank->add_option("--grid", bank_grid, "Pose grid preset: small|large");
  add_common(bank, bank_common, "bank");

  // run
  auto* run = app.add_subcommand("run", "One episode with a transcript");
  Common run_common;
  std::string run_bank, run_category = "0", run_pose, run_policy = "informed";
  size_t run_pose_index = 0;
  FilterFlags run_filter;
  NoiseFlags run_noise;
  OracleFlags run_oracle;
  uint64_t run_seed = 0;
  double run_margin = -1.0;
  run->add_option("--bank", run_bank, "Bank directory");
  run->add_option("--category", run_category, "Ground-truth category (name or index)");
  run->add_option("--pose", run_pose, "Ground-truth pose \"x,y,theta\" on the grid");
  run->add_option("--pose-index", run_pose_index, "Ground-truth pose index");
  run->add_option("--policy", run_policy, "informed|random");
  run->add_option("--seed", run_seed, "Episode seed");
  run->add_option("--plate-margin", run_margin, "Hole plate margin, mm (<0 = full window)");
  add_filter_flags(run, run_filter);
  add_noise_flags(run, run_noise);
  add_oracle_flags(run, run_oracle);
  add_common(run, run_common, "run_out");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Episode sweep with a report");
  Common exp_common;
  std::string exp_bank, exp_policy = "informed";
  FilterFlags exp_filter;
  NoiseFlags exp_noise;
  OracleFlags exp_oracle;
  double exp_subsample = 0.1;
  bool exp_full = false;
  int exp_repeats = 1;
  uint64_t exp_seed = 0;
  double exp_margin = -1.0;
  exp->add_option("--bank", exp_bank, "Bank directory");
  exp->add_option("--policy", exp_policy, "informed|random");
  exp->add_option("--subsample", exp_subsample, "Pose fraction per category");
  exp->add_flag("--full", exp_full, "Sweep every pose");
  exp->add_option("--repeats", exp_repeats, "Independent repetitions");
  exp->add_option("--seed", exp_seed, "Top-level seed");
  exp->add_option("--plate-margin", exp_margin, "Hole plate margin, mm (<0 = full window)");
  add_filter_flags(exp, exp_filter);
  add_noise_flags(exp, exp_noise);
  add_oracle_flags(exp, exp_oracle);
  add_common(exp, exp_common, "experiment_out");

  // ablate
  auto* abl = app.add_subcommand("ablate", "Paired informed-vs-random comparison");
  Common abl_common;
  std::string abl_bank;
  FilterFlags abl_filter;
  NoiseFlags abl_noise;
  OracleFlags abl_oracle;
  double abl_subsample = 0.05;
  int abl_repeats = 1;
  uint64_t abl_seed = 0;
  int abl_bootstrap = 1000;
  double abl_margin = -1.0;
  abl->add_option("--bank", abl_bank, "Bank directory");
  abl->add_option("--subsample", abl_subsample, "Pose fraction per category");
  abl->add_option("--repeats", abl_repeats, "Independent repetitions");
  abl->add_option("--seed", abl_seed, "Top-level seed");
  abl->add_option("--bootstrap", abl_bootstrap, "Bootstrap rounds");
  abl->add_option("--plate-margin", abl_margin, "Hole plate margin, mm (<0 = full window)");
  add_filter_flags(abl, abl_filter);
  add_noise_flags(abl, abl_noise);
  add_oracle_flags(abl, abl_oracle);
  add_common(abl, abl_common, "ablate_out");

  // report
  auto* rpt = app.add_subcommand("report", "Re-render a report JSON");
  Common rpt_common;
  std::string rpt_in, rpt_csv, rpt_entropy;
  rpt->add_option("--in", rpt_in, "report.json or ablate.json");
  rpt->add_option("--csv", rpt_csv, "Write the per-n accuracy CSV here");
  rpt->add_option("--entropy-csv", rpt_entropy, "Write the per-step entropy CSV here");
  add_common(rpt, rpt_common, "report_out");

  int rc = 0;
  glyphs->callback([&] {
    rc = cmd_shapes_glyphs(glyphs, glyphs_common, glyphs_set, glyphs_scale);
  });
  maze->callback([&] {
    rc = cmd_shapes_maze(maze, maze_common, maze_seed, maze_walls, maze_perturb);
  });
  bank->callback([&] {
    rc = cmd_bank(bank, bank_common, bank_board, bank_shapes_dir, bank_grid);
  });
  run->callback([&] {
    rc = cmd_run(run, run_common, run_bank, run_category, run_pose, run_pose_index,
                 run_policy, run_filter, run_noise, run_oracle, run_seed, run_margin);
  });
  exp->callback([&] {
    rc = cmd_experiment(exp, exp_common, exp_bank, exp_policy, exp_filter, exp_noise,
                        exp_oracle, exp_subsample, exp_full, exp_repeats, exp_seed,
                        exp_margin);
  });
  abl->callback([&] {
    rc = cmd_ablate(abl, abl_common, abl_bank, abl_filter, abl_noise, abl_oracle,
                    abl_subsample, abl_repeats, abl_seed, abl_bootstrap, abl_margin);
  });
  rpt->callback([&] { rc = cmd_report(rpt, rpt_common, rpt_in, rpt_csv, rpt_entropy); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return rc;
}
