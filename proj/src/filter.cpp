#include "tactile/filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "tactile/kernels.hpp"

namespace tactile {

void FilterConfig::validate() const {
  if (particle_count < 1) throw std::invalid_argument("particle_count must be >= 1");
  if (max_interactions < 1) throw std::invalid_argument("max_interactions must be >= 1");
  if (!(delta_prob > 0.5 && delta_prob <= 1.0))
    throw std::invalid_argument("delta_prob must lie in (0.5, 1]");
  if (delta_act < 0.0) throw std::invalid_argument("delta_act must be >= 0");
  if (max_step_mm && *max_step_mm <= 0.0)
    throw std::invalid_argument("max_step_mm must be > 0 when set");
  if (max_step_deg && *max_step_deg <= 0.0)
    throw std::invalid_argument("max_step_deg must be > 0 when set");
  if (!(jitter >= 0.0 && jitter < 1.0))
    throw std::invalid_argument("jitter must lie in [0, 1)");
}

double FilterConfig::resolved_delta_act(const PegImageBank& bank) const {
  return delta_act > 0.0 ? delta_act : bank.delta_act;
}

namespace {

// Inverse-CDF draw of k samples from unnormalized scores. Used for the
// similarity-proportional init; scores must have positive total mass.
std::vector<size_t> sample_categorical(const std::vector<double>& scores, size_t k,
                                       Rng& g) {
  std::vector<double> cdf(scores.size());
  double total = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    total += scores[i];
    cdf[i] = total;
  }
  if (!(total > 0.0)) throw std::runtime_error("init scores have zero total mass");
  std::vector<size_t> out(k);
  for (size_t j = 0; j < k; ++j) {
    const double u = uniform01(g) * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out[j] = std::min<size_t>(it - cdf.begin(), scores.size() - 1);
  }
  return out;
}

// Hop a particle to a neighboring grid pose (one step along one axis).
// Actions are additive on the displacement lattice, so the hop shifts the
// remembered initial pose by the same step; both ends must stay on the grid
// for the move to be a valid hypothesis.
void jitter_particle(Particle& p, const PoseGrid& grid, Rng& g) {
  if (!p.pose_index) return;
  const size_t ny = grid.y_values.size(), nt = grid.theta_values.size();
  const auto split = [&](size_t index) {
    const size_t it = index % nt, rest = index / nt;
    return std::array<size_t, 3>{rest / ny, rest % ny, it};
  };
  const std::array<size_t, 3> cur = split(*p.pose_index);
  const std::array<size_t, 3> init = split(p.init_pose_index);
  const std::array<size_t, 3> sizes{grid.x_values.size(), ny, nt};

  std::array<std::pair<int, int>, 6> moves;  // (axis, direction)
  size_t n_moves = 0;
  for (int axis = 0; axis < 3; ++axis) {
    for (int dir : {-1, +1}) {
      const size_t c = cur[axis], i = init[axis];
      const bool ok = dir > 0 ? (c + 1 < sizes[axis] && i + 1 < sizes[axis])
                              : (c > 0 && i > 0);
      if (ok) moves[n_moves++] = {axis, dir};
    }
  }
  if (n_moves == 0) return;
  const auto [axis, dir] = moves[std::min(
      static_cast<size_t>(uniform01(g) * n_moves), n_moves - 1)];
  std::array<size_t, 3> nc = cur, ni = init;
  nc[axis] += dir;
  ni[axis] += dir;
  p.pose_index = (nc[0] * ny + nc[1]) * nt + nc[2];
  p.init_pose_index = (ni[0] * ny + ni[1]) * nt + ni[2];
  p.pose = grid.pose_at(*p.pose_index);
}

}  // namespace

ParticleSet init_particles(const ContactPatch& hole_obs, const PegImageBank& bank,
                           const SimilarityModel& model, const FilterConfig& cfg,
                           uint64_t seed) {
  cfg.validate();
  bank.validate();
  const size_t n = bank.entry_count();
  std::vector<double> scores(n);
  if (cfg.init_mode == InitMode::kPrior) {
    scores = kernels::score_hp_bank(model, hole_obs, bank, cfg.parallel);
  } else {
    // Uniform over grid poses within the requested bounds, all categories.
    const UniformBounds& b = cfg.uniform_bounds;
    for (size_t i = 0; i < n; ++i) {
      const Pose2D p = bank.grid.pose_at(bank.pose_index_of(i));
      const bool ok = (b.x_max <= 0.0 || std::abs(p.x) <= b.x_max) &&
                      (b.y_max <= 0.0 || std::abs(p.y) <= b.y_max) &&
                      (b.theta_max <= 0.0 || std::abs(p.theta) <= b.theta_max);
      scores[i] = ok ? 1.0 : 0.0;
    }
  }
  Rng g(derive_seed(seed, streams::kInit));
  const auto picks = sample_categorical(scores, static_cast<size_t>(cfg.particle_count), g);
  ParticleSet set;
  set.particles.reserve(picks.size());
  const double w = 1.0 / static_cast<double>(picks.size());
  for (size_t idx : picks) {
    Particle p;
    p.category = bank.category_of(idx);
    p.pose_index = bank.pose_index_of(idx);
    p.init_pose_index = *p.pose_index;
    p.pose = bank.grid.pose_at(*p.pose_index);
    p.weight = w;
    set.particles.push_back(p);
  }
  return set;
}

Particle apply_action(const Particle& p, const Action& a, const PegImageBank& bank) {
  Particle out = p;
  out.pose = compose(p.pose, a);
  out.pose_index = bank.grid.snap(out.pose);
  return out;
}

std::vector<double> posterior_weights(const std::vector<double>& priors,
                                      const std::vector<double>& likelihoods) {
  if (priors.size() != likelihoods.size())
    throw std::invalid_argument("prior/likelihood size mismatch");
  double lsum = 0.0;
  for (double l : likelihoods) {
    if (!(l >= 0.0)) throw std::invalid_argument("negative likelihood");
    lsum += l;
  }
  if (!(lsum > 0.0)) throw std::runtime_error("likelihoods have zero total mass");
  std::vector<double> post(priors.size());
  double psum = 0.0;
  for (size_t i = 0; i < priors.size(); ++i) {
    post[i] = priors[i] * (likelihoods[i] / lsum);
    psum += post[i];
  }
  if (!(psum > 0.0)) throw std::runtime_error("posterior has zero total mass");
  for (double& w : post) w /= psum;
  return post;
}

std::vector<size_t> resample_indices(const std::vector<double>& weights, size_t k,
                                     ResampleScheme scheme, Rng& g) {
  const size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("cannot resample an empty set");
  std::vector<double> cdf(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    total += weights[i];
    cdf[i] = total;
  }
  if (!(total > 0.0)) throw std::runtime_error("weights have zero total mass");
  std::vector<size_t> out(k);
  if (scheme == ResampleScheme::kMultinomial) {
    for (size_t j = 0; j < k; ++j) {
      const double u = uniform01(g) * total;
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      out[j] = std::min<size_t>(it - cdf.begin(), n - 1);
    }
  } else {
    // Systematic: one uniform offset, k evenly spaced probes.
    const double step = total / static_cast<double>(k);
    double u = uniform01(g) * step;
    size_t i = 0;
    for (size_t j = 0; j < k; ++j) {
      while (i + 1 < n && cdf[i] < u) ++i;
      out[j] = i;
      u += step;
    }
  }
  return out;
}

ParticleSet update(const ParticleSet& particles, const ContactPatch& hole_obs,
                   const Action& executed, const PegImageBank& bank,
                   const SimilarityModel& model, const FilterConfig& cfg,
                   uint64_t seed) {
  cfg.validate();
  const size_t k = particles.size();
  if (k == 0) throw std::invalid_argument("update on an empty particle set");

  // Propagate, then group identical (category, grid pose) hypotheses so each
  // bank image is scored once. Off-grid poses share the no-contact image but
  // remain distinct hypotheses.
  std::vector<Particle> moved(k);
  for (size_t i = 0; i < k; ++i) moved[i] = apply_action(particles.particles[i], executed, bank);

  std::map<std::pair<size_t, size_t>, size_t> group_of;  // (category, pose or npos) -> group
  constexpr size_t kOffGrid = static_cast<size_t>(-1);
  std::vector<const ContactPatch*> images;
  std::vector<size_t> group_index(k);
  for (size_t i = 0; i < k; ++i) {
    const auto key = std::make_pair(moved[i].category,
                                    moved[i].pose_index ? *moved[i].pose_index : kOffGrid);
    auto [it, inserted] = group_of.emplace(key, images.size());
    if (inserted) images.push_back(&bank.patch_for(moved[i].category, moved[i].pose_index));
    group_index[i] = it->second;
  }

  const std::vector<double> group_scores =
      kernels::score_hp_batch(model, hole_obs, images, cfg.parallel);

  std::vector<double> priors(k), likelihoods(k);
  for (size_t i = 0; i < k; ++i) {
    priors[i] = particles.particles[i].weight;
    likelihoods[i] = group_scores[group_index[i]];
  }
  const std::vector<double> post = posterior_weights(priors, likelihoods);

  Rng g(derive_seed(seed, streams::kResample));
  const auto idx = resample_indices(post, k, cfg.resample, g);
  ParticleSet out;
  out.particles.reserve(k);
  const double w = 1.0 / static_cast<double>(k);
  for (size_t j : idx) {
    Particle p = moved[j];
    p.weight = w;
    out.particles.push_back(p);
  }
  if (cfg.jitter > 0.0) {
    for (Particle& p : out.particles) {
      if (uniform01(g) < cfg.jitter) jitter_particle(p, bank.grid, g);
    }
  }
  return out;
}

std::vector<double> class_posterior(const ParticleSet& set, size_t n_categories) {
  std::vector<double> out(n_categories, 0.0);
  if (set.size() == 0) return out;
  for (const Particle& p : set.particles) {
    if (p.category >= n_categories) throw std::out_of_range("particle category out of range");
    out[p.category] += 1.0;
  }
  for (double& v : out) v /= static_cast<double>(set.size());
  return out;
}

bool should_terminate(const ParticleSet& set, const FilterConfig& cfg,
                      size_t n_categories) {
  const auto post = class_posterior(set, n_categories);
  const double top = *std::max_element(post.begin(), post.end());
  return top > cfg.delta_prob;
}

const Particle& best_particle(const ParticleSet& set) {
  if (set.size() == 0) throw std::invalid_argument("best_particle on an empty set");
  const auto& ps = set.particles;
  double wmax = ps[0].weight;
  for (const Particle& p : ps) wmax = std::max(wmax, p.weight);

  // Count duplicates among the tied particles so a hypothesis backed by more
  // copies wins before falling back to category/pose order.
  using Key = std::tuple<size_t, double, double, double>;
  std::map<Key, size_t> counts;
  for (const Particle& p : ps) {
    if (p.weight == wmax) counts[{p.category, p.pose.x, p.pose.y, p.pose.theta}]++;
  }
  const Particle* best = nullptr;
  size_t best_count = 0;
  for (const Particle& p : ps) {
    if (p.weight != wmax) continue;
    const size_t c = counts[{p.category, p.pose.x, p.pose.y, p.pose.theta}];
    if (best == nullptr || c > best_count ||
        (c == best_count &&
         std::make_tuple(p.category, p.pose.x, p.pose.y, p.pose.theta) <
             std::make_tuple(best->category, best->pose.x, best->pose.y, best->pose.theta))) {
      best = &p;
      best_count = c;
    }
  }
  return *best;
}

PoseEstimate pose_estimate(const ParticleSet& set, std::optional<Pose2D> ground_truth) {
  const Particle& b = best_particle(set);
  PoseEstimate est;
  est.category = b.category;
  est.pose = b.pose;
  if (ground_truth) {
    double exy = 0.0, eth = 0.0;
    for (const Particle& p : set.particles) {
      exy += p.weight * std::hypot(p.pose.x - ground_truth->x, p.pose.y - ground_truth->y);
      eth += p.weight * std::abs(wrap_degrees(p.pose.theta - ground_truth->theta));
    }
    est.err_xy = exy;
    est.err_theta = eth;
  }
  return est;
}

double weight_sum(const ParticleSet& set) {
  double s = 0.0;
  for (const Particle& p : set.particles) s += p.weight;
  return s;
}

}  // namespace tactile
