#include "tactile/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "tactile/digest.hpp"

namespace tactile {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* resample_name(ResampleScheme s) {
  return s == ResampleScheme::kSystematic ? "systematic" : "multinomial";
}

ResampleScheme parse_resample(const std::string& s) {
  if (s == "systematic") return ResampleScheme::kSystematic;
  if (s == "multinomial") return ResampleScheme::kMultinomial;
  throw std::invalid_argument("unknown resample scheme \"" + s + "\"");
}

const char* init_mode_name(InitMode m) {
  return m == InitMode::kPrior ? "prior" : "uniform";
}

InitMode parse_init_mode(const std::string& s) {
  if (s == "prior") return InitMode::kPrior;
  if (s == "uniform") return InitMode::kUniform;
  throw std::invalid_argument("unknown init mode \"" + s + "\"");
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

void to_json(json& j, const NoiseModel& m) {
  j = json{{"flip_prob", m.flip_prob},
           {"blur_radius", m.blur_radius},
           {"jitter_x_mm", m.jitter_x_mm},
           {"jitter_y_mm", m.jitter_y_mm},
           {"jitter_theta_deg", m.jitter_theta_deg}};
}

void from_json(const json& j, NoiseModel& m) {
  m = NoiseModel{};
  get_if_present(j, "flip_prob", m.flip_prob);
  get_if_present(j, "blur_radius", m.blur_radius);
  get_if_present(j, "jitter_x_mm", m.jitter_x_mm);
  get_if_present(j, "jitter_y_mm", m.jitter_y_mm);
  get_if_present(j, "jitter_theta_deg", m.jitter_theta_deg);
}

void to_json(json& j, const FilterConfig& c) {
  j = json{{"K", c.particle_count},
           {"n_max", c.max_interactions},
           {"delta_prob", c.delta_prob},
           {"delta_act", c.delta_act},
           {"resample", resample_name(c.resample)},
           {"init_mode", init_mode_name(c.init_mode)},
           {"uniform_bounds", json{{"x_max", c.uniform_bounds.x_max},
                                   {"y_max", c.uniform_bounds.y_max},
                                   {"theta_max", c.uniform_bounds.theta_max}}},
           {"max_step_mm", c.max_step_mm ? json(*c.max_step_mm) : json()},
           {"max_step_deg", c.max_step_deg ? json(*c.max_step_deg) : json()},
           {"jitter", c.jitter},
           {"parallel", c.parallel}};
}

void from_json(const json& j, FilterConfig& c) {
  c = FilterConfig{};
  get_if_present(j, "K", c.particle_count);
  get_if_present(j, "n_max", c.max_interactions);
  get_if_present(j, "delta_prob", c.delta_prob);
  get_if_present(j, "delta_act", c.delta_act);
  if (j.contains("resample")) c.resample = parse_resample(j.at("resample").get<std::string>());
  if (j.contains("init_mode"))
    c.init_mode = parse_init_mode(j.at("init_mode").get<std::string>());
  if (auto it = j.find("uniform_bounds"); it != j.end() && !it->is_null()) {
    get_if_present(*it, "x_max", c.uniform_bounds.x_max);
    get_if_present(*it, "y_max", c.uniform_bounds.y_max);
    get_if_present(*it, "theta_max", c.uniform_bounds.theta_max);
  }
  if (auto it = j.find("max_step_mm"); it != j.end() && !it->is_null())
    c.max_step_mm = it->get<double>();
  if (auto it = j.find("max_step_deg"); it != j.end() && !it->is_null())
    c.max_step_deg = it->get<double>();
  get_if_present(j, "jitter", c.jitter);
  get_if_present(j, "parallel", c.parallel);
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"policy", policy_name(c.policy)},
           {"filter", c.filter},
           {"noise", c.noise},
           {"subsample", c.subsample},
           {"full_sweep", c.full_sweep},
           {"repeats", c.repeats},
           {"seed", c.seed},
           {"plate_margin_mm", c.plate_margin_mm ? json(*c.plate_margin_mm) : json()},
           {"accuracy_ns", c.accuracy_ns}};
}

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (j.contains("policy")) c.policy = parse_policy(j.at("policy").get<std::string>());
  if (j.contains("filter")) c.filter = j.at("filter").get<FilterConfig>();
  if (j.contains("noise")) c.noise = j.at("noise").get<NoiseModel>();
  get_if_present(j, "subsample", c.subsample);
  get_if_present(j, "full_sweep", c.full_sweep);
  get_if_present(j, "repeats", c.repeats);
  get_if_present(j, "seed", c.seed);
  if (auto it = j.find("plate_margin_mm"); it != j.end() && !it->is_null())
    c.plate_margin_mm = it->get<double>();
  get_if_present(j, "accuracy_ns", c.accuracy_ns);
}

void to_json(json& j, const AblateConfig& c) {
  j = json{{"filter", c.filter},
           {"noise", c.noise},
           {"subsample", c.subsample},
           {"repeats", c.repeats},
           {"seed", c.seed},
           {"bootstrap_rounds", c.bootstrap_rounds},
           {"plate_margin_mm", c.plate_margin_mm ? json(*c.plate_margin_mm) : json()},
           {"accuracy_ns", c.accuracy_ns}};
}

void from_json(const json& j, AblateConfig& c) {
  c = AblateConfig{};
  if (j.contains("filter")) c.filter = j.at("filter").get<FilterConfig>();
  if (j.contains("noise")) c.noise = j.at("noise").get<NoiseModel>();
  get_if_present(j, "subsample", c.subsample);
  get_if_present(j, "repeats", c.repeats);
  get_if_present(j, "seed", c.seed);
  get_if_present(j, "bootstrap_rounds", c.bootstrap_rounds);
  if (auto it = j.find("plate_margin_mm"); it != j.end() && !it->is_null())
    c.plate_margin_mm = it->get<double>();
  get_if_present(j, "accuracy_ns", c.accuracy_ns);
}

std::string config_fingerprint(const json& config) {
  const std::string dump = config.dump();
  return to_hex(fnv1a64(dump.data(), dump.size()));
}

std::string input_digest(const std::string& path) {
  const fs::path p(path);
  if (fs::is_directory(p)) {
    // Mix relative names into the stream so renames change the digest.
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    uint64_t h = 0xcbf29ce484222325ull;
    for (const fs::path& f : files) {
      const std::string rel = fs::relative(f, p).generic_string();
      h = fnv1a64(rel.data(), rel.size(), h);
      const std::string fd = file_digest(f.string());
      h = fnv1a64(fd.data(), fd.size(), h);
    }
    return to_hex(h);
  }
  return file_digest(path);
}

void write_manifest(const std::string& path, const RunManifest& m) {
  json inputs = json::array();
  for (const ManifestInput& in : m.inputs) {
    inputs.push_back(json{{"path", in.path}, {"digest", in.digest}});
  }
  const json j{{"tool", m.tool},    {"version", m.version}, {"command", m.command},
               {"config", m.config}, {"seed", m.seed},       {"inputs", inputs},
               {"outputs", m.outputs}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest " + path + ": " + e.what());
  }
  RunManifest m;
  m.tool = j.at("tool").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.seed = j.at("seed").get<uint64_t>();
  for (const json& in_j : j.at("inputs")) {
    m.inputs.push_back(
        {in_j.at("path").get<std::string>(), in_j.at("digest").get<std::string>()});
  }
  for (const json& o : j.at("outputs")) m.outputs.push_back(o.get<std::string>());
  if (m.tool != kToolName)
    throw std::runtime_error("manifest written by a different tool: " + m.tool);
  return m;
}

void verify_manifest_inputs(const RunManifest& m, const std::string& workdir) {
  for (const ManifestInput& in : m.inputs) {
    const fs::path p = workdir.empty() ? fs::path(in.path) : fs::path(workdir) / in.path;
    const std::string got = input_digest(p.string());
    if (got != in.digest) {
      throw std::runtime_error("input \"" + in.path + "\" changed since the manifest: " +
                               got + " != " + in.digest);
    }
  }
}

}  // namespace tactile
