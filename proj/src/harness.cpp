#include "tactile/harness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "tactile/kernels.hpp"
#include "tactile/manifest.hpp"

namespace tactile {

using nlohmann::json;

const char* policy_name(Policy p) {
  return p == Policy::kInformed ? "informed" : "random";
}

Policy parse_policy(const std::string& name) {
  if (name == "informed") return Policy::kInformed;
  if (name == "random") return Policy::kRandom;
  throw std::invalid_argument("unknown policy \"" + name + "\" (informed|random)");
}

Board make_board(GridKind kind) {
  Board b;
  const std::vector<std::string> names = {"A", "B", "C", "D", "E", "F",
                                          "G", "H", "I", "J", "K", "L"};
  b.shapes = glyph_library(
      names, kind == GridKind::kSmall ? glyph_scale_small() : glyph_scale_large());
  b.grid = make_pose_grid(kind);
  b.window = SensorWindow{};
  return b;
}

double class_entropy(const std::vector<double>& posterior) {
  double h = 0.0;
  for (double p : posterior) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

size_t posterior_argmax(const std::vector<double>& posterior) {
  if (posterior.empty()) throw std::invalid_argument("empty posterior");
  size_t best = 0;
  for (size_t i = 1; i < posterior.size(); ++i) {
    if (posterior[i] > posterior[best]) best = i;
  }
  return best;
}

namespace {

json action_to_json(const Action& a) {
  return json{{"dx", a.dx}, {"dy", a.dy}, {"dtheta", a.dtheta}};
}

void write_step_line(std::ostream& out, const StepLog& s,
                     const std::vector<double>& posterior) {
  json line{{"t", s.t},
            {"action", action_to_json(s.action)},
            {"blind", s.blind},
            {"n_feasible", s.n_feasible},
            {"posterior", posterior},
            {"entropy", s.entropy},
            {"top_category", s.top_category},
            {"top_prob", s.top_prob}};
  out << line.dump() << "\n";
}

void write_result_line(std::ostream& out, const EpisodeResult& r) {
  json line{{"result",
             json{{"gt_category", r.gt_category},
                  {"gt_pose_index", r.gt_pose_index},
                  {"predicted_category", r.predicted_category},
                  {"predicted_pose_index", r.predicted_pose_index},
                  {"predicted_pose", json{{"x", r.predicted_pose.x},
                                          {"y", r.predicted_pose.y},
                                          {"theta", r.predicted_pose.theta}}},
                  {"touches_used", r.touches_used},
                  {"terminated_early", r.terminated_early},
                  {"err_xy", r.err_xy},
                  {"err_theta", r.err_theta}}}};
  out << line.dump() << "\n";
}

StepLog make_step_log(int t, const ActionChoice& choice,
                      const std::vector<double>& posterior) {
  StepLog s;
  s.t = t;
  s.action = choice.action;
  s.blind = choice.blind;
  s.n_feasible = choice.n_feasible;
  s.top_category = posterior_argmax(posterior);
  s.top_prob = posterior[s.top_category];
  s.entropy = class_entropy(posterior);
  return s;
}

}  // namespace

EpisodeResult run_episode(const EpisodeConfig& cfg, const PegImageBank& bank,
                          const std::vector<ShapeSpec>& shapes,
                          const SimilarityModel& model, std::ostream* transcript) {
  cfg.filter.validate();
  cfg.noise.validate();
  if (shapes.size() != bank.categories.size())
    throw std::invalid_argument("bank/board mismatch: category counts differ");
  for (size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i].category_id != bank.categories[i])
      throw std::invalid_argument("bank/board mismatch: category \"" +
                                  shapes[i].category_id + "\" vs \"" +
                                  bank.categories[i] + "\"");
  }
  if (cfg.gt_category >= shapes.size())
    throw std::out_of_range("ground-truth category out of range");
  if (cfg.gt_pose_index >= bank.grid.size())
    throw std::out_of_range("ground-truth pose index out of range");

  const size_t n_cats = bank.categories.size();
  const ShapeSpec& gt_shape = shapes[cfg.gt_category];
  const int n_max = cfg.filter.max_interactions;

  EpisodeResult res;
  res.gt_category = cfg.gt_category;
  res.gt_pose_index = cfg.gt_pose_index;

  // First touch happens at the ground-truth displacement (rough localization
  // is assumed); every later pose is reached by composing chosen actions.
  Pose2D true_pose = bank.grid.pose_at(cfg.gt_pose_index);
  ContactPatch obs =
      observe_hole(gt_shape, true_pose, bank.window, cfg.noise,
                   derive_seed(cfg.seed, streams::kObserve, 1), cfg.plate_margin_mm);
  ParticleSet particles = init_particles(obs, bank, model, cfg.filter, cfg.seed);

  std::vector<double> post = class_posterior(particles, n_cats);
  res.posteriors.push_back(post);
  res.steps.push_back(make_step_log(1, ActionChoice{}, post));
  if (transcript) write_step_line(*transcript, res.steps.back(), post);
  res.touches_used = 1;

  // Termination is only checked after an update, so even a lone candidate
  // takes a confirming second touch.
  bool terminated = false;
  for (int t = 2; t <= n_max && !terminated; ++t) {
    ActionChoice choice;
    if (cfg.policy == Policy::kInformed) {
      choice = select_action(particles, bank, model, cfg.filter);
    } else {
      choice = random_action(particles, bank, cfg.filter,
                             derive_seed(cfg.seed, streams::kPolicy, t));
    }
    true_pose = compose(true_pose, choice.action);
    obs = observe_hole(gt_shape, true_pose, bank.window, cfg.noise,
                       derive_seed(cfg.seed, streams::kObserve, t),
                       cfg.plate_margin_mm);
    particles = update(particles, obs, choice.action, bank, model, cfg.filter,
                       derive_seed(cfg.seed, streams::kResample, t));

    post = class_posterior(particles, n_cats);
    res.posteriors.push_back(post);
    res.steps.push_back(make_step_log(t, choice, post));
    if (transcript) write_step_line(*transcript, res.steps.back(), post);
    res.touches_used = static_cast<size_t>(t);
    terminated = should_terminate(particles, cfg.filter, n_cats);
  }
  res.terminated_early = terminated;

  const Particle& best = best_particle(particles);
  res.predicted_category = best.category;
  res.predicted_pose_index = best.init_pose_index;
  res.predicted_pose = bank.grid.pose_at(best.init_pose_index);

  const Pose2D gt0 = bank.grid.pose_at(cfg.gt_pose_index);
  double exy = 0.0, eth = 0.0;
  for (const Particle& p : particles.particles) {
    const Pose2D p0 = bank.grid.pose_at(p.init_pose_index);
    exy += p.weight * std::hypot(p0.x - gt0.x, p0.y - gt0.y);
    eth += p.weight * std::abs(wrap_degrees(p0.theta - gt0.theta));
  }
  res.err_xy = exy;
  res.err_theta = eth;

  if (transcript) write_result_line(*transcript, res);
  return res;
}

std::vector<Trial> stratified_trials(size_t n_categories, const PoseGrid& grid,
                                     double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("trial fraction must lie in (0, 1]");
  grid.validate();
  const size_t n_poses = grid.size();
  const size_t take = std::min<size_t>(
      n_poses, static_cast<size_t>(std::ceil(fraction * static_cast<double>(n_poses))));
  std::vector<Trial> out;
  out.reserve(n_categories * take);
  for (size_t c = 0; c < n_categories; ++c) {
    std::vector<size_t> idx(n_poses);
    for (size_t i = 0; i < n_poses; ++i) idx[i] = i;
    Rng g(derive_seed(seed, streams::kTrials, c));
    for (size_t i = n_poses - 1; i > 0; --i) {
      const size_t j = std::min<size_t>(
          static_cast<size_t>(uniform01(g) * static_cast<double>(i + 1)), i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    for (size_t i : idx) out.push_back({c, i});
  }
  return out;
}

std::vector<Trial> full_trials(size_t n_categories, const PoseGrid& grid) {
  grid.validate();
  std::vector<Trial> out;
  out.reserve(n_categories * grid.size());
  for (size_t c = 0; c < n_categories; ++c) {
    for (size_t i = 0; i < grid.size(); ++i) out.push_back({c, i});
  }
  return out;
}

void ExperimentConfig::validate() const {
  filter.validate();
  noise.validate();
  if (!full_sweep && !(subsample > 0.0 && subsample <= 1.0))
    throw std::invalid_argument("subsample must lie in (0, 1]");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (accuracy_ns.empty()) throw std::invalid_argument("accuracy_ns must be non-empty");
  for (int n : accuracy_ns) {
    if (n < 1) throw std::invalid_argument("accuracy checkpoints must be >= 1");
  }
}

ExperimentReport aggregate_results(const std::vector<Trial>& trials,
                                   const std::vector<EpisodeResult>& results,
                                   size_t n_categories, const std::vector<int>& ns,
                                   int n_max) {
  if (trials.size() != results.size())
    throw std::invalid_argument("trial/result count mismatch");
  ExperimentReport rep;
  rep.episodes = results.size();
  rep.ns = ns;
  rep.accuracy_at.assign(ns.size(), 0.0);
  rep.confusion.assign(n_categories, std::vector<size_t>(n_categories, 0));
  rep.mean_entropy.assign(static_cast<size_t>(n_max), 0.0);
  if (results.empty()) return rep;

  size_t pose_checked = 0, pose_exact = 0;
  for (size_t e = 0; e < results.size(); ++e) {
    const EpisodeResult& r = results[e];
    const size_t gt = trials[e].category;
    const size_t touches = r.posteriors.size();
    for (size_t k = 0; k < ns.size(); ++k) {
      const size_t at = std::min<size_t>(static_cast<size_t>(ns[k]), touches) - 1;
      if (posterior_argmax(r.posteriors[at]) == gt) rep.accuracy_at[k] += 1.0;
    }
    rep.confusion[gt][posterior_argmax(r.posteriors.back())]++;
    rep.mean_err_xy += r.err_xy;
    rep.mean_err_theta += r.err_theta;
    rep.mean_touches += static_cast<double>(r.touches_used);
    if (r.predicted_category == gt) {
      ++pose_checked;
      if (r.predicted_pose_index == trials[e].pose_index) ++pose_exact;
    }
    for (int t = 1; t <= n_max; ++t) {
      const size_t at = std::min<size_t>(static_cast<size_t>(t), touches) - 1;
      rep.mean_entropy[static_cast<size_t>(t) - 1] += class_entropy(r.posteriors[at]);
    }
  }
  const double n = static_cast<double>(results.size());
  for (double& a : rep.accuracy_at) a = 100.0 * a / n;
  rep.mean_err_xy /= n;
  rep.mean_err_theta /= n;
  rep.mean_touches /= n;
  rep.pose_exact_percent =
      pose_checked == 0 ? 0.0
                        : 100.0 * static_cast<double>(pose_exact) /
                              static_cast<double>(pose_checked);
  for (double& h : rep.mean_entropy) h /= n;
  return rep;
}

namespace {

std::vector<Trial> experiment_trials(size_t n_categories, const PoseGrid& grid,
                                     bool full, double subsample, int repeats,
                                     uint64_t seed) {
  std::vector<Trial> trials;
  for (int r = 0; r < repeats; ++r) {
    const auto part =
        full ? full_trials(n_categories, grid)
             : stratified_trials(n_categories, grid, subsample,
                                 derive_seed(seed, streams::kTrials, static_cast<uint64_t>(r)));
    trials.insert(trials.end(), part.begin(), part.end());
  }
  return trials;
}

// Episodes are independent; run them in any order and aggregate by index so
// the report never depends on scheduling. Inner parallelism is turned off
// when the episode loop itself is parallel.
std::vector<EpisodeResult> run_trials(const std::vector<Trial>& trials, Policy policy,
                                      const FilterConfig& filter, const NoiseModel& noise,
                                      std::optional<double> plate_margin_mm,
                                      uint64_t seed, const PegImageBank& bank,
                                      const std::vector<ShapeSpec>& shapes,
                                      const SimilarityModel& model) {
  FilterConfig inner = filter;
  inner.parallel = false;
  std::vector<EpisodeResult> results(trials.size());
  const long n = static_cast<long>(trials.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (filter.parallel)
#endif
  for (long i = 0; i < n; ++i) {
    EpisodeConfig ec;
    ec.gt_category = trials[static_cast<size_t>(i)].category;
    ec.gt_pose_index = trials[static_cast<size_t>(i)].pose_index;
    ec.policy = policy;
    ec.filter = inner;
    ec.noise = noise;
    ec.plate_margin_mm = plate_margin_mm;
    ec.seed = derive_seed(seed, streams::kEpisode, static_cast<uint64_t>(i));
    results[static_cast<size_t>(i)] = run_episode(ec, bank, shapes, model);
  }
  return results;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const PegImageBank& bank,
                                const std::vector<ShapeSpec>& shapes,
                                const SimilarityModel& model,
                                std::vector<EpisodeResult>* episodes_out) {
  cfg.validate();
  bank.validate();
  const size_t n_cats = bank.categories.size();
  const auto trials = experiment_trials(n_cats, bank.grid, cfg.full_sweep,
                                        cfg.subsample, cfg.repeats, cfg.seed);
  const auto results = run_trials(trials, cfg.policy, cfg.filter, cfg.noise,
                                  cfg.plate_margin_mm, cfg.seed, bank, shapes, model);
  ExperimentReport rep = aggregate_results(trials, results, n_cats, cfg.accuracy_ns,
                                           cfg.filter.max_interactions);
  rep.seed = cfg.seed;
  rep.config_fingerprint = config_fingerprint(json(cfg));
  if (episodes_out) *episodes_out = results;
  return rep;
}

BaselinePrediction pixel_baseline(const ContactPatch& hole_obs, const PegImageBank& bank) {
  bank.validate();
  BaselinePrediction best;
  best.score = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < bank.entry_count(); ++i) {
    const double d = l1_distance(hole_obs, bank.patches[i]);
    if (d < best.score) {
      best.score = d;
      best.category = bank.category_of(i);
      best.pose_index = bank.pose_index_of(i);
    }
  }
  best.pose = bank.grid.pose_at(best.pose_index);
  return best;
}

BaselinePrediction single_touch_baseline(const ContactPatch& hole_obs,
                                         const PegImageBank& bank,
                                         const SimilarityModel& model) {
  bank.validate();
  const std::vector<double> scores = kernels::score_hp_bank(model, hole_obs, bank, true);
  BaselinePrediction best;
  best.score = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > best.score) {
      best.score = scores[i];
      best.category = bank.category_of(i);
      best.pose_index = bank.pose_index_of(i);
    }
  }
  best.pose = bank.grid.pose_at(best.pose_index);
  return best;
}

void AblateConfig::validate() const {
  filter.validate();
  noise.validate();
  if (!(subsample > 0.0 && subsample <= 1.0))
    throw std::invalid_argument("subsample must lie in (0, 1]");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (bootstrap_rounds < 1) throw std::invalid_argument("bootstrap_rounds must be >= 1");
  if (accuracy_ns.empty()) throw std::invalid_argument("accuracy_ns must be non-empty");
}

namespace {

// Nearest-rank 95% interval of the bootstrap distribution.
std::pair<double, double> percentile_95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t b = v.size();
  const size_t lo = static_cast<size_t>(std::floor(0.025 * static_cast<double>(b - 1)));
  const size_t hi = static_cast<size_t>(std::floor(0.975 * static_cast<double>(b - 1)));
  return {v[lo], v[hi]};
}

}  // namespace

AblateReport ablate_policies(const AblateConfig& cfg, const PegImageBank& bank,
                             const std::vector<ShapeSpec>& shapes,
                             const SimilarityModel& model) {
  cfg.validate();
  bank.validate();
  const size_t n_cats = bank.categories.size();
  const auto trials = experiment_trials(n_cats, bank.grid, false, cfg.subsample,
                                        cfg.repeats, cfg.seed);
  // Identical trials and episode seeds on both arms; only the policy differs.
  const auto informed = run_trials(trials, Policy::kInformed, cfg.filter, cfg.noise,
                                   cfg.plate_margin_mm, cfg.seed, bank, shapes, model);
  const auto random = run_trials(trials, Policy::kRandom, cfg.filter, cfg.noise,
                                 cfg.plate_margin_mm, cfg.seed, bank, shapes, model);

  const size_t n = trials.size();
  const size_t kn = cfg.accuracy_ns.size();
  AblateReport rep;
  rep.pairs = n;
  rep.ns = cfg.accuracy_ns;
  rep.seed = cfg.seed;
  rep.config_fingerprint = config_fingerprint(json(cfg));

  // Per-episode correctness at each checkpoint, then paired differences.
  auto correct_at = [&](const EpisodeResult& r, size_t gt, int at_n) {
    const size_t at = std::min<size_t>(static_cast<size_t>(at_n), r.posteriors.size()) - 1;
    return posterior_argmax(r.posteriors[at]) == gt ? 1.0 : 0.0;
  };
  std::vector<std::vector<double>> diff_n(kn, std::vector<double>(n));
  std::vector<double> diff_touch(n);
  rep.informed_acc.assign(kn, 0.0);
  rep.random_acc.assign(kn, 0.0);
  for (size_t e = 0; e < n; ++e) {
    for (size_t k = 0; k < kn; ++k) {
      const double ci = correct_at(informed[e], trials[e].category, cfg.accuracy_ns[k]);
      const double cr = correct_at(random[e], trials[e].category, cfg.accuracy_ns[k]);
      rep.informed_acc[k] += ci;
      rep.random_acc[k] += cr;
      diff_n[k][e] = ci - cr;
    }
    rep.informed_touches += static_cast<double>(informed[e].touches_used);
    rep.random_touches += static_cast<double>(random[e].touches_used);
    diff_touch[e] = static_cast<double>(informed[e].touches_used) -
                    static_cast<double>(random[e].touches_used);
  }
  const double dn = static_cast<double>(n);
  rep.diff.assign(kn, 0.0);
  for (size_t k = 0; k < kn; ++k) {
    rep.informed_acc[k] = 100.0 * rep.informed_acc[k] / dn;
    rep.random_acc[k] = 100.0 * rep.random_acc[k] / dn;
    rep.diff[k] = rep.informed_acc[k] - rep.random_acc[k];
  }
  rep.informed_touches /= dn;
  rep.random_touches /= dn;
  rep.touches_diff = rep.informed_touches - rep.random_touches;

  // Paired bootstrap: resample episodes with replacement, one shared index
  // draw per round for every metric.
  const int b = cfg.bootstrap_rounds;
  std::vector<std::vector<double>> boot_n(kn, std::vector<double>(static_cast<size_t>(b)));
  std::vector<double> boot_touch(static_cast<size_t>(b));
  Rng g(derive_seed(cfg.seed, streams::kBootstrap));
  for (int round = 0; round < b; ++round) {
    std::vector<double> sums(kn, 0.0);
    double tsum = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const size_t pick = std::min<size_t>(
          static_cast<size_t>(uniform01(g) * static_cast<double>(n)), n - 1);
      for (size_t k = 0; k < kn; ++k) sums[k] += diff_n[k][pick];
      tsum += diff_touch[pick];
    }
    for (size_t k = 0; k < kn; ++k)
      boot_n[k][static_cast<size_t>(round)] = 100.0 * sums[k] / dn;
    boot_touch[static_cast<size_t>(round)] = tsum / dn;
  }
  rep.ci_lo.assign(kn, 0.0);
  rep.ci_hi.assign(kn, 0.0);
  for (size_t k = 0; k < kn; ++k) {
    const auto [lo, hi] = percentile_95(boot_n[k]);
    rep.ci_lo[k] = lo;
    rep.ci_hi[k] = hi;
  }
  const auto [tlo, thi] = percentile_95(boot_touch);
  rep.touches_ci_lo = tlo;
  rep.touches_ci_hi = thi;
  return rep;
}

}  // namespace tactile
