#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "tactile/harness.hpp"

namespace tactile {

inline constexpr const char* kToolName = "tactile_filter";
inline constexpr const char* kToolVersion = "0.1.0";

// JSON adapters for the config types, so manifests and reports can snapshot
// a run and rebuild it later.
void to_json(nlohmann::json& j, const NoiseModel& m);
void from_json(const nlohmann::json& j, NoiseModel& m);
void to_json(nlohmann::json& j, const FilterConfig& c);
void from_json(const nlohmann::json& j, FilterConfig& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
void to_json(nlohmann::json& j, const AblateConfig& c);
void from_json(const nlohmann::json& j, AblateConfig& c);

std::string config_fingerprint(const nlohmann::json& config);

struct ManifestInput {
  std::string path;    // as passed on the command line (workdir-relative)
  std::string digest;  // fnv-1a over the file bytes, or over a directory's files
};

// Everything needed to reproduce a command: resolved config, seed, input
// digests, and the outputs it wrote.
struct RunManifest {
  std::string tool = kToolName;
  std::string version = kToolVersion;
  std::string command;
  nlohmann::json config;
  uint64_t seed = 0;
  std::vector<ManifestInput> inputs;
  std::vector<std::string> outputs;
};

// Digest of a file, or of a directory (every regular file, sorted by
// relative path, names mixed into the stream).
std::string input_digest(const std::string& path);

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

// Recompute input digests relative to workdir; throws when any differ.
void verify_manifest_inputs(const RunManifest& m, const std::string& workdir);

}  // namespace tactile
