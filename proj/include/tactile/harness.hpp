#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tactile/action.hpp"
#include "tactile/bank.hpp"
#include "tactile/filter.hpp"
#include "tactile/sensing.hpp"

namespace tactile {

enum class Policy { kInformed, kRandom };

const char* policy_name(Policy p);
Policy parse_policy(const std::string& name);

// A candidate set plus the pose grid and sensor it was collected with.
struct Board {
  std::vector<ShapeSpec> shapes;
  PoseGrid grid;
  SensorWindow window;
  std::optional<double> plate_margin_mm;  // hole plate extent; empty = whole window
};

// Built-in boards: glyphs A..L at the scale matching the grid preset.
Board make_board(GridKind kind);

struct EpisodeConfig {
  size_t gt_category = 0;
  size_t gt_pose_index = 0;
  Policy policy = Policy::kInformed;
  FilterConfig filter;
  NoiseModel noise;
  uint64_t seed = 0;
  std::optional<double> plate_margin_mm;
};

struct StepLog {
  int t = 1;
  Action action;  // zero action for the first touch
  bool blind = false;
  size_t n_feasible = 0;
  size_t top_category = 0;
  double top_prob = 0.0;
  double entropy = 0.0;
};

struct EpisodeResult {
  size_t gt_category = 0;
  size_t gt_pose_index = 0;
  // Algorithm readout: the best particle, mapped back through the executed
  // action chain so the estimate is relative to the first touch.
  size_t predicted_category = 0;
  size_t predicted_pose_index = 0;
  Pose2D predicted_pose;
  size_t touches_used = 0;
  bool terminated_early = false;
  double err_xy = 0.0;     // sum_k w_k |xy_k - xy_gt|, first-touch frame
  double err_theta = 0.0;  // sum_k w_k |wrap(theta_k - theta_gt)|
  std::vector<std::vector<double>> posteriors;  // class posterior per touch
  std::vector<StepLog> steps;
  std::string transcript_path;  // empty when no transcript was written
};

// Shannon entropy (nats) of a class posterior.
double class_entropy(const std::vector<double>& posterior);

// Posterior argmax with the smallest category winning ties.
size_t posterior_argmax(const std::vector<double>& posterior);

// One full episode: first touch at the ground-truth pose, then
// select action / move / observe / update until the class posterior clears
// delta_prob or the touch budget runs out. Optionally streams one JSON line
// per step into `transcript`.
EpisodeResult run_episode(const EpisodeConfig& cfg, const PegImageBank& bank,
                          const std::vector<ShapeSpec>& shapes,
                          const SimilarityModel& model,
                          std::ostream* transcript = nullptr);

struct Trial {
  size_t category = 0;
  size_t pose_index = 0;
};

// Per-category random subsample of ceil(fraction * |grid|) poses.
std::vector<Trial> stratified_trials(size_t n_categories, const PoseGrid& grid,
                                     double fraction, uint64_t seed);
std::vector<Trial> full_trials(size_t n_categories, const PoseGrid& grid);

struct ExperimentConfig {
  Policy policy = Policy::kInformed;
  FilterConfig filter;
  NoiseModel noise;
  double subsample = 0.1;  // fraction of grid poses per category per repeat
  bool full_sweep = false;
  int repeats = 1;  // independent repetitions, each with its own trial draw
  uint64_t seed = 0;
  std::optional<double> plate_margin_mm;
  std::vector<int> accuracy_ns = {1, 3, 5, 10};

  void validate() const;
};

struct ExperimentReport {
  size_t episodes = 0;
  std::vector<int> ns;              // accuracy checkpoints
  std::vector<double> accuracy_at;  // percent, aligned with ns
  double mean_err_xy = 0.0;
  double mean_err_theta = 0.0;
  double mean_touches = 0.0;
  double pose_exact_percent = 0.0;  // among correctly classified episodes
  std::vector<std::vector<size_t>> confusion;  // [gt][predicted at final touch]
  std::vector<double> mean_entropy;            // per t, carried forward
  uint64_t seed = 0;
  std::string config_fingerprint;
};

// Accuracy at n counts an episode correct when the posterior argmax equals
// ground truth once n touches happened or the episode already terminated
// (terminal prediction carried forward).
ExperimentReport aggregate_results(const std::vector<Trial>& trials,
                                   const std::vector<EpisodeResult>& results,
                                   size_t n_categories, const std::vector<int>& ns,
                                   int n_max);

// One episode per (trial, repeat); episode seeds derive from (seed, episode
// index) so reports are independent of execution order.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const PegImageBank& bank,
                                const std::vector<ShapeSpec>& shapes,
                                const SimilarityModel& model,
                                std::vector<EpisodeResult>* episodes_out = nullptr);

struct BaselinePrediction {
  size_t category = 0;
  size_t pose_index = 0;
  Pose2D pose;
  double score = 0.0;  // distance for pixel, similarity for single-touch
};

// Nearest neighbor in raw L1 distance over the whole bank.
BaselinePrediction pixel_baseline(const ContactPatch& hole_obs, const PegImageBank& bank);

// Argmax of the hole-vs-peg score over the whole bank.
BaselinePrediction single_touch_baseline(const ContactPatch& hole_obs,
                                         const PegImageBank& bank,
                                         const SimilarityModel& model);

struct AblateConfig {
  FilterConfig filter;
  NoiseModel noise;
  double subsample = 0.05;
  int repeats = 1;
  uint64_t seed = 0;
  int bootstrap_rounds = 1000;
  std::optional<double> plate_margin_mm;
  std::vector<int> accuracy_ns = {1, 3, 5, 10};

  void validate() const;
};

struct AblateReport {
  size_t pairs = 0;
  std::vector<int> ns;
  std::vector<double> informed_acc, random_acc;  // percent
  std::vector<double> diff, ci_lo, ci_hi;        // percentage points, 95% CI
  double informed_touches = 0.0, random_touches = 0.0;
  double touches_diff = 0.0, touches_ci_lo = 0.0, touches_ci_hi = 0.0;
  uint64_t seed = 0;
  std::string config_fingerprint;
};

// Informed vs random with paired trials and seeds; per-n accuracy deltas and
// the touches-to-termination delta carry paired bootstrap 95% intervals.
AblateReport ablate_policies(const AblateConfig& cfg, const PegImageBank& bank,
                             const std::vector<ShapeSpec>& shapes,
                             const SimilarityModel& model);

}  // namespace tactile
