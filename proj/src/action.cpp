#include "tactile/action.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "tactile/rng.hpp"

namespace tactile {

namespace {

double magnitude(const Action& a) {
  return std::abs(a.dx) + std::abs(a.dy) + std::abs(a.dtheta);
}

// Higher score first; ties prefer the gentler move, then a fixed lexicographic
// order so the choice never depends on candidate enumeration order.
bool better(const Action& a, double sa, const Action& b, double sb) {
  if (sa != sb) return sa > sb;
  const double ma = magnitude(a), mb = magnitude(b);
  if (ma != mb) return ma < mb;
  return std::make_tuple(a.dx, a.dy, a.dtheta) < std::make_tuple(b.dx, b.dy, b.dtheta);
}

bool within_caps(const Action& a, const FilterConfig& cfg) {
  if (cfg.max_step_mm && std::hypot(a.dx, a.dy) > *cfg.max_step_mm) return false;
  if (cfg.max_step_deg && std::abs(a.dtheta) > *cfg.max_step_deg) return false;
  return true;
}

std::vector<Action> capped_candidates(const PoseGrid& grid, const Pose2D& current,
                                      const FilterConfig& cfg) {
  std::vector<Action> out = enumerate_actions(grid, current);
  if (cfg.max_step_mm || cfg.max_step_deg) {
    std::erase_if(out, [&](const Action& a) { return !within_caps(a, cfg); });
  }
  return out;
}

struct Group {
  Particle rep;
  size_t count = 0;
};

// Collapse identical hypotheses; the reference particle's own copy is
// excluded so the sum runs over the other K-1 particles.
std::vector<Group> group_particles(const ParticleSet& set, size_t star_index) {
  using Key = std::tuple<size_t, double, double, double>;
  std::map<Key, size_t> index_of;
  std::vector<Group> groups;
  for (const Particle& p : set.particles) {
    const Key key{p.category, p.pose.x, p.pose.y, p.pose.theta};
    auto [it, inserted] = index_of.emplace(key, groups.size());
    if (inserted) groups.push_back({p, 0});
    groups[it->second].count++;
  }
  const Particle& star = set.particles[star_index];
  const Key star_key{star.category, star.pose.x, star.pose.y, star.pose.theta};
  groups[index_of.at(star_key)].count--;
  return groups;
}

}  // namespace

std::vector<Action> enumerate_actions(const PoseGrid& grid, const Pose2D& current) {
  grid.validate();
  const size_t anchor_idx = grid.snap_clamped(current);
  const Pose2D anchor = grid.pose_at(anchor_idx);
  std::vector<Action> out;
  out.reserve(grid.size() - 1);
  for (size_t i = 0; i < grid.size(); ++i) {
    if (i == anchor_idx) continue;
    out.push_back(action_between(anchor, grid.pose_at(i)));
  }
  return out;
}

std::vector<Action> feasible_actions(const std::vector<Action>& candidates,
                                     const Particle& star, const PegImageBank& bank,
                                     double delta_act) {
  std::vector<Action> out;
  out.reserve(candidates.size());
  for (const Action& a : candidates) {
    const Particle moved = apply_action(star, a, bank);
    if (bank.patch_for(moved.category, moved.pose_index).mass() > delta_act) {
      out.push_back(a);
    }
  }
  return out;
}

double action_likelihood(const ParticleSet& set, size_t star_index, const Action& a,
                         const PegImageBank& bank, const SimilarityModel& model) {
  if (star_index >= set.size()) throw std::out_of_range("star_index out of range");
  const Particle star_moved = apply_action(set.particles[star_index], a, bank);
  const ContactPatch& img_star = bank.patch_for(star_moved.category, star_moved.pose_index);
  double l = 0.0;
  for (size_t i = 0; i < set.size(); ++i) {
    if (i == star_index) continue;
    const Particle moved = apply_action(set.particles[i], a, bank);
    const ContactPatch& img = bank.patch_for(moved.category, moved.pose_index);
    l += 1.0 / model.score_pp(img_star, img);
  }
  return l;
}

ActionChoice select_action(const ParticleSet& set, const PegImageBank& bank,
                           const SimilarityModel& model, const FilterConfig& cfg) {
  cfg.validate();
  const Particle& star = best_particle(set);
  const size_t star_index = static_cast<size_t>(&star - set.particles.data());
  const double delta = cfg.resolved_delta_act(bank);

  const std::vector<Action> candidates = capped_candidates(bank.grid, star.pose, cfg);
  const std::vector<Action> feasible = feasible_actions(candidates, star, bank, delta);

  ActionChoice choice;
  choice.n_feasible = feasible.size();
  if (feasible.empty()) {
    choice.action = Action{0.0, 0.0, 0.0};
    choice.blind = true;
    return choice;
  }

  const std::vector<Group> groups = group_particles(set, star_index);
  const long n = static_cast<long>(feasible.size());
  std::vector<double> scores(feasible.size(), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (cfg.parallel)
#endif
  for (long ai = 0; ai < n; ++ai) {
    const Action& a = feasible[static_cast<size_t>(ai)];
    const Particle star_moved = apply_action(star, a, bank);
    const ContactPatch& img_star = bank.patch_for(star_moved.category, star_moved.pose_index);
    double l = 0.0;
    for (const Group& g : groups) {
      if (g.count == 0) continue;
      const Particle moved = apply_action(g.rep, a, bank);
      const ContactPatch& img = bank.patch_for(moved.category, moved.pose_index);
      l += static_cast<double>(g.count) / model.score_pp(img_star, img);
    }
    scores[static_cast<size_t>(ai)] = l;
  }

  size_t best = 0;
  for (size_t i = 1; i < feasible.size(); ++i) {
    if (better(feasible[i], scores[i], feasible[best], scores[best])) best = i;
  }
  choice.action = feasible[best];

  std::vector<size_t> order(feasible.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    return better(feasible[x], scores[x], feasible[y], scores[y]);
  });
  const size_t n_top = std::min<size_t>(5, order.size());
  for (size_t i = 0; i < n_top; ++i) {
    choice.top.push_back({feasible[order[i]], scores[order[i]]});
  }
  return choice;
}

ActionChoice random_action(const ParticleSet& set, const PegImageBank& bank,
                           const FilterConfig& cfg, uint64_t seed) {
  cfg.validate();
  const Particle& star = best_particle(set);
  const double delta = cfg.resolved_delta_act(bank);
  const std::vector<Action> candidates = capped_candidates(bank.grid, star.pose, cfg);
  const std::vector<Action> feasible = feasible_actions(candidates, star, bank, delta);

  ActionChoice choice;
  choice.n_feasible = feasible.size();
  if (feasible.empty()) {
    choice.action = Action{0.0, 0.0, 0.0};
    choice.blind = true;
    return choice;
  }
  Rng g(seed);
  const size_t pick = std::min<size_t>(
      static_cast<size_t>(uniform01(g) * static_cast<double>(feasible.size())),
      feasible.size() - 1);
  choice.action = feasible[pick];
  return choice;
}

}  // namespace tactile
