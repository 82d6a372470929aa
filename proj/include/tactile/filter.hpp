#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tactile/bank.hpp"
#include "tactile/geometry.hpp"
#include "tactile/rng.hpp"
#include "tactile/similarity.hpp"

namespace tactile {

// One joint hypothesis: which peg, and the SE(2) displacement of the sensor
// from its center. pose_index is the snapped grid pose used for bank lookups
// (empty once the pose leaves the collected grid); init_pose_index remembers
// where the hypothesis started so estimates can be reported relative to the
// first touch.
struct Particle {
  size_t category = 0;
  Pose2D pose;
  double weight = 0.0;
  std::optional<size_t> pose_index;
  size_t init_pose_index = 0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  size_t size() const { return particles.size(); }
};

enum class ResampleScheme { kSystematic, kMultinomial };
enum class InitMode { kPrior, kUniform };

struct UniformBounds {
  double x_max = 0.0, y_max = 0.0, theta_max = 0.0;  // 0 means grid extremes
};

struct FilterConfig {
  int particle_count = 100;   // K
  int max_interactions = 10;  // N_max
  double delta_prob = 0.95;   // termination threshold on the class posterior
  double delta_act = 0.0;     // contact threshold; 0 resolves to the bank default
  ResampleScheme resample = ResampleScheme::kSystematic;
  InitMode init_mode = InitMode::kPrior;
  UniformBounds uniform_bounds;
  // Optional cap on per-step displacement for candidate actions (unbounded
  // by default).
  std::optional<double> max_step_mm;
  std::optional<double> max_step_deg;
  // Probability that a freshly resampled particle hops to a neighboring grid
  // pose, restoring pose diversity lost to resampling. Off by default: the
  // dynamics are exactly deterministic.
  double jitter = 0.0;
  bool parallel = true;

  void validate() const;
  double resolved_delta_act(const PegImageBank& bank) const;
};

// First-touch initialization: hole-vs-peg scores over every bank entry form
// a categorical prior; K hypotheses are sampled i.i.d. from it and returned
// with uniform weights (the draw itself encodes the scores).
ParticleSet init_particles(const ContactPatch& hole_obs, const PegImageBank& bank,
                           const SimilarityModel& model, const FilterConfig& cfg,
                           uint64_t seed);

// Deterministic motion: the pose composes with the executed action; the bank
// pose snaps to the nearest grid entry or drops off-grid.
Particle apply_action(const Particle& p, const Action& a, const PegImageBank& bank);

// One Bayes step: propagate by the executed action, weight by normalized
// hole-vs-peg likelihoods, multiply into the prior, renormalize, resample
// back to K equally weighted particles.
ParticleSet update(const ParticleSet& particles, const ContactPatch& hole_obs,
                   const Action& executed, const PegImageBank& bank,
                   const SimilarityModel& model, const FilterConfig& cfg,
                   uint64_t seed);

// Posterior weights before resampling: normalize likelihoods, multiply into
// priors, renormalize. Exposed for tests.
std::vector<double> posterior_weights(const std::vector<double>& priors,
                                      const std::vector<double>& likelihoods);

// Draw K ancestor indices proportional to the weights.
std::vector<size_t> resample_indices(const std::vector<double>& weights, size_t k,
                                     ResampleScheme scheme, Rng& g);

// Count-based class marginal (Eq. over particle counts; equals the weighted
// marginal after resampling).
std::vector<double> class_posterior(const ParticleSet& set, size_t n_categories);

bool should_terminate(const ParticleSet& set, const FilterConfig& cfg,
                      size_t n_categories);

// Highest-weight particle; ties prefer the hypothesis duplicated most often
// in the tied set, then lowest category, lexicographic pose, lowest index.
const Particle& best_particle(const ParticleSet& set);

struct PoseEstimate {
  size_t category = 0;
  Pose2D pose;
  std::optional<double> err_xy;     // sum_k w_k * |xy_k - xy_gt|
  std::optional<double> err_theta;  // sum_k w_k * |wrap(theta_k - theta_gt)|
};

PoseEstimate pose_estimate(const ParticleSet& set,
                           std::optional<Pose2D> ground_truth = std::nullopt);

double weight_sum(const ParticleSet& set);

}  // namespace tactile
