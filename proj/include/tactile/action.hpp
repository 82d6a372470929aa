#pragma once

#include <cstdint>
#include <vector>

#include "tactile/bank.hpp"
#include "tactile/filter.hpp"

namespace tactile {

struct ScoredAction {
  Action action;
  double score = 0.0;
};

struct ActionChoice {
  Action action;
  size_t n_feasible = 0;
  bool blind = false;               // no feasible action; fall back to staying put
  std::vector<ScoredAction> top;    // best few candidates, for logging
};

// All actions that move the current pose onto another grid pose. The current
// pose is first clamped to its nearest grid entry so the candidates land
// exactly on the grid.
std::vector<Action> enumerate_actions(const PoseGrid& grid, const Pose2D& current);

// Candidates whose expected observation under the reference particle still
// touches the part (image mass above the contact threshold).
std::vector<Action> feasible_actions(const std::vector<Action>& candidates,
                                     const Particle& star, const PegImageBank& bank,
                                     double delta_act);

// Discriminativeness of one action: sum over every other particle of the
// inverse peg-vs-peg similarity between the images the reference particle
// and that particle would produce after the action. The particle at
// star_index is excluded (K-1 terms).
double action_likelihood(const ParticleSet& set, size_t star_index, const Action& a,
                         const PegImageBank& bank, const SimilarityModel& model);

// Greedy policy: score every feasible candidate and take the argmax. Ties
// prefer the smallest |dx|+|dy|+|dtheta|, then lexicographic (dx, dy, dtheta).
ActionChoice select_action(const ParticleSet& set, const PegImageBank& bank,
                           const SimilarityModel& model, const FilterConfig& cfg);

// Baseline policy: uniform draw from the same feasible set.
ActionChoice random_action(const ParticleSet& set, const PegImageBank& bank,
                           const FilterConfig& cfg, uint64_t seed);

}  // namespace tactile
