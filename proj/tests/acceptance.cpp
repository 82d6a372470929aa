// Acceptance gate for the tactile filter: every release criterion measured in
// one binary, one PASS/FAIL line each, exit code = number of failures.
// Thresholds are pinned here on purpose; change them only with a release note.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tactile/action.hpp"
#include "tactile/bank.hpp"
#include "tactile/filter.hpp"
#include "tactile/harness.hpp"
#include "tactile/sensing.hpp"
#include "tactile/similarity.hpp"
#include "test_util.hpp"

using namespace tactile;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

void progress(const std::string& msg) {
  std::fprintf(stderr, "[acceptance] %s\n", msg.c_str());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TACTILE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<unreadable:" + p.string() + ">";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- criterion 7: closed-form oracles ---------------------------------------

Outcome criterion_formulas() {
  Outcome o{7, "formula oracles", false, ""};

  const std::vector<float> e1 = {1.0f, 0.0f};
  const std::vector<float> e2 = {0.0f, 1.0f};
  const double loss_orth = info_nce_loss(e1, e1, {e2}, 1.0);
  const double loss_same = info_nce_loss(e1, e1, {e1}, 1.0);
  const double nce_err = std::max(std::abs(loss_orth - std::log(1.0 + std::exp(-1.0))),
                                  std::abs(loss_same - std::log(2.0)));

  // similarity-proportional init on a rigged 2-entry bank: the two entries
  // score 0.75 and 0.25 under a sharpness-1 oracle, so the category draw
  // frequencies must land there
  const SensorWindow w = testutil::tiny_window(8, 8);
  std::vector<float> a(64, 0.0f), b(64, 0.0f);
  for (int i = 0; i < 16; ++i) a[static_cast<size_t>(i)] = 1.0f;
  for (int i = 0; i < 48; ++i) b[static_cast<size_t>(i)] = 1.0f;
  std::vector<ContactPatch> patches;
  patches.emplace_back(8, 8, std::move(a));
  patches.emplace_back(8, 8, std::move(b));
  const PegImageBank bank =
      testutil::hand_bank({"A", "B"}, testutil::make_grid({0.0}, {0.0}, {0.0}), w,
                          std::move(patches));
  const GeometricOracle soft(1e-6, 1.0);
  FilterConfig fc;
  fc.particle_count = 100000;
  const ParticleSet set =
      init_particles(ContactPatch::ones(8, 8), bank, soft, fc, 404);
  size_t first = 0;
  for (const Particle& p : set.particles) first += (p.category == 0);
  const double frac = static_cast<double>(first) / 100000.0;
  const double freq_err = std::abs(frac - 0.75);

  // scripted 3-particle action score: one competitor walks off the grid (floor
  // term), the other lands on a print with 0.75 agreement at sharpness 2
  const double eps = 1e-6;
  const GeometricOracle pair_model(eps, 2.0);
  const PoseGrid grid2 = testutil::make_grid({0.0, 4.0}, {0.0}, {0.0});
  std::vector<float> three_q(64, 1.0f);
  for (int i = 0; i < 16; ++i) three_q[static_cast<size_t>(i)] = 0.0f;
  std::vector<ContactPatch> p2;
  p2.push_back(ContactPatch::ones(8, 8));
  p2.push_back(ContactPatch::ones(8, 8));
  p2.push_back(ContactPatch::zeros(8, 8));
  p2.emplace_back(8, 8, std::move(three_q));
  const PegImageBank bank2 = testutil::hand_bank({"A", "B"}, grid2, w, std::move(p2));
  ParticleSet trio;
  const auto put = [&](size_t cat, size_t pose) {
    Particle p;
    p.category = cat;
    p.pose = bank2.grid.pose_at(pose);
    p.pose_index = pose;
    p.init_pose_index = pose;
    p.weight = 1.0 / 3.0;
    trio.particles.push_back(p);
  };
  put(0, 0);
  put(0, 1);
  put(1, 0);
  const double expected = 1.0 / eps + 1.0 / (0.75 * 0.75);
  const double got = action_likelihood(trio, 0, Action{4.0, 0.0, 0.0}, bank2, pair_model);
  const double eq4_rel = std::abs(got - expected) / expected;

  o.pass = nce_err <= 1e-9 && freq_err <= 0.01 && eq4_rel <= 1e-9;
  o.detail = fmt("info-NCE err %.2e (tol 1e-9); init freq %.4f vs 0.75 (tol 0.01, K=100000); "
                 "scripted action score rel err %.2e (tol 1e-9)",
                 nce_err, frac, eq4_rel);
  return o;
}

// ---- criterion 1: exhaustive Bayes equivalence -------------------------------

Outcome criterion_exhaustive() {
  Outcome o{1, "exhaustive-Bayes equivalence", false, ""};
  const auto t0 = Clock::now();

  const std::vector<ShapeSpec> shapes = {testutil::make_rect("r86", 8.0, 6.0),
                                         testutil::make_rect("r104", 10.0, 4.0),
                                         testutil::make_rect("r66", 6.0, 6.0)};
  const PoseGrid grid = testutil::make_grid({-2.0, 2.0}, {0.0}, {0.0, 30.0});
  const SensorWindow window = testutil::tiny_window();
  const PegImageBank bank = build_bank(shapes, grid, window, false);
  const GeometricOracle model(1e-6, 8.0);
  const NoiseModel clean;

  const size_t gt_cat = 1;
  Pose2D gt = grid.pose_at(grid.index_of(1, 0, 0));
  const ContactPatch first = observe_hole(shapes[gt_cat], gt, window, clean, 0);

  FilterConfig fc;
  fc.particle_count = 5000;
  ParticleSet set = init_particles(first, bank, model, fc, 31);
  testutil::ExhaustiveBayes ref(bank, model, first);

  double max_tv = testutil::tv_distance(class_posterior(set, 3), ref.class_marginal());
  const Action script[] = {{-4.0, 0.0, 0.0}, {0.0, 0.0, 30.0}, {4.0, 0.0, -30.0}};
  int step = 0;
  for (const Action& a : script) {
    gt = compose(gt, a);
    const ContactPatch obs = observe_hole(shapes[gt_cat], gt, window, clean, 0);
    set = update(set, obs, a, bank, model, fc, 100 + step);
    ref.step(a, obs);
    max_tv = std::max(max_tv,
                      testutil::tv_distance(class_posterior(set, 3), ref.class_marginal()));
    ++step;
  }
  const double secs = seconds_since(t0);
  o.pass = max_tv < 0.05 && secs < 10.0;
  o.detail = fmt("max TV %.4f < 0.05 across init + 3 updates (K=5000, 12 hypotheses); "
                 "%.2fs < 10s",
                 max_tv, secs);
  return o;
}

// ---- criterion 10: step throughput -------------------------------------------

Outcome criterion_throughput(const PegImageBank& large_bank, const Board& large) {
  Outcome o{10, "step throughput", false, ""};
  const GeometricOracle model;
  const NoiseModel clean;
  const ContactPatch obs =
      observe_hole(large.shapes[4], large_bank.grid.pose_at(423), large_bank.window,
                   clean, 7);
  FilterConfig fc;  // K = 100
  const ParticleSet set = init_particles(obs, large_bank, model, fc, 11);
  const Action a{4.0, 0.0, 0.0};
  const ContactPatch obs2 =
      observe_hole(large.shapes[4], compose(large_bank.grid.pose_at(423), a),
                   large_bank.window, clean, 8);

  double worst_ms = 0.0;
  size_t n_feasible = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto t0 = Clock::now();
    const ParticleSet updated = update(set, obs2, a, large_bank, model, fc, 5);
    const ActionChoice choice = select_action(updated, large_bank, model, fc);
    worst_ms = std::max(worst_ms, seconds_since(t0) * 1000.0);
    n_feasible = choice.n_feasible;
  }
  o.pass = worst_ms < 100.0;
  o.detail = fmt("worst step %.2fms < 100ms (update K=100 + select over %zu feasible "
                 "actions, 64x48, %zu-pose grid)",
                 worst_ms, n_feasible, large_bank.grid.size());
  return o;
}

// ---- criterion 9: entropy monotonicity ---------------------------------------

Outcome criterion_entropy(const PegImageBank& small_bank, const Board& small) {
  Outcome o{9, "entropy monotonicity", false, ""};
  ExperimentConfig cfg;
  cfg.policy = Policy::kInformed;
  cfg.subsample = 0.1;
  cfg.seed = 1;
  cfg.filter.delta_prob = 1.0;  // never terminate early: full 10-touch trails
  const GeometricOracle model(1e-6, 8.0);
  const ExperimentReport rep = run_experiment(cfg, small_bank, small.shapes, model);

  bool strict = rep.episodes >= 100;
  for (size_t t = 1; t < rep.mean_entropy.size(); ++t) {
    strict = strict && rep.mean_entropy[t] < rep.mean_entropy[t - 1];
  }
  o.pass = strict;
  o.detail = fmt("mean entropy %.3f -> %.4f strictly decreasing over t=1..%zu "
                 "(%zu episodes, sharpness 8, delta_prob 1)",
                 rep.mean_entropy.front(), rep.mean_entropy.back(),
                 rep.mean_entropy.size(), rep.episodes);
  return o;
}

// ---- criterion 6: baseline gap ------------------------------------------------

Outcome criterion_baselines(const PegImageBank& small_bank, const Board& small) {
  Outcome o{6, "pixel-baseline gap", false, ""};
  const GeometricOracle model;
  const NoiseModel clean;
  const auto trials = full_trials(small_bank.categories.size(), small_bank.grid);
  size_t pixel_ok = 0, single_ok = 0;
  for (const Trial& t : trials) {
    const ContactPatch obs = observe_hole(small.shapes[t.category],
                                          small_bank.grid.pose_at(t.pose_index),
                                          small_bank.window, clean, 0);
    pixel_ok += (pixel_baseline(obs, small_bank).category == t.category);
    single_ok += (single_touch_baseline(obs, small_bank, model).category == t.category);
  }
  const double n = static_cast<double>(trials.size());
  const double pixel_pct = 100.0 * static_cast<double>(pixel_ok) / n;
  const double single_pct = 100.0 * static_cast<double>(single_ok) / n;
  o.pass = pixel_pct < 20.0 && single_pct >= pixel_pct + 30.0;
  o.detail = fmt("pixel %.2f%% < 20%%; single-touch %.2f%% clears it by %.1fpp >= 30pp "
                 "(full %zu-pose sweep, noiseless)",
                 pixel_pct, single_pct, single_pct - pixel_pct, trials.size());
  return o;
}

// ---- criterion 4: candidate-count sweep ----------------------------------------

Outcome criterion_class_sweep(const PegImageBank& large_bank, const Board& large) {
  Outcome o{4, "candidate-count sweep", false, ""};
  const GeometricOracle model;
  std::vector<double> touches;
  for (size_t n_cats : {4u, 8u, 12u}) {
    const PegImageBank bank = subset_bank(large_bank, n_cats);
    const std::vector<ShapeSpec> shapes(large.shapes.begin(),
                                        large.shapes.begin() + static_cast<long>(n_cats));
    ExperimentConfig cfg;
    cfg.subsample = 0.05;
    cfg.repeats = 2;
    cfg.seed = 1;
    const ExperimentReport rep = run_experiment(cfg, bank, shapes, model);
    touches.push_back(rep.mean_touches);
    progress(fmt("criterion 4: %zu candidates -> %.4f mean touches (%zu episodes)",
                 n_cats, rep.mean_touches, rep.episodes));
  }
  o.pass = touches[0] <= touches[1] && touches[1] <= touches[2];
  o.detail = fmt("mean touches %.4f <= %.4f <= %.4f across 4 -> 8 -> 12 candidates "
                 "(5%% subsample x 2 repeats, seed 1)",
                 touches[0], touches[1], touches[2]);
  return o;
}

// ---- criterion 3: informed beats random -----------------------------------------

Outcome criterion_ablation(const PegImageBank& large_bank, const Board& large) {
  Outcome o{3, "policy ablation", false, ""};
  AblateConfig cfg;
  cfg.subsample = 0.05;
  cfg.repeats = 4;
  cfg.seed = 1;
  cfg.bootstrap_rounds = 2000;
  cfg.noise.flip_prob = 0.05;
  cfg.filter.max_step_mm = 8.0;
  cfg.filter.max_step_deg = 30.0;
  const GeometricOracle model(1e-6, 24.0);
  const AblateReport rep = ablate_policies(cfg, large_bank, large.shapes, model);

  size_t k5 = 0;
  for (size_t k = 0; k < rep.ns.size(); ++k) {
    if (rep.ns[k] == 5) k5 = k;
  }
  o.pass = rep.diff[k5] >= 5.0 && rep.ci_lo[k5] > 0.0;
  o.detail = fmt("informed - random at n=5: %+.2fpp >= 5pp, 95%% CI [%.2f, %.2f] excludes 0 "
                 "(%zu pairs, 5%% flips, step caps 8mm/30deg, sharpness 24, seed 1)",
                 rep.diff[k5], rep.ci_lo[k5], rep.ci_hi[k5], rep.pairs);
  return o;
}

// ---- criteria 2 + 5: identification accuracy and pose exactness ------------------

std::pair<Outcome, Outcome> criterion_identification(const PegImageBank& large_bank,
                                                     const Board& large) {
  Outcome acc{2, "noiseless identification", false, ""};
  Outcome pose{5, "pose exactness", false, ""};

  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.subsample = 0.1;
  cfg.repeats = 10;
  cfg.seed = 1;
  const GeometricOracle model;
  const ExperimentReport rep = run_experiment(cfg, large_bank, large.shapes, model);
  const double secs = seconds_since(t0);

  size_t k10 = 0;
  for (size_t k = 0; k < rep.ns.size(); ++k) {
    if (rep.ns[k] == 10) k10 = k;
  }
  acc.pass = rep.accuracy_at[k10] >= 90.0 && secs < 300.0;
  acc.detail = fmt("accuracy@10 %.2f%% >= 90%% over %zu episodes "
                   "(large board, 10%% subsample x 10 repeats, seed 1); %.0fs < 300s",
                   rep.accuracy_at[k10], rep.episodes, secs);
  pose.pass = rep.pose_exact_percent >= 95.0;
  pose.detail = fmt("exact grid pose on %.2f%% >= 95%% of correctly classified episodes "
                    "(same run as criterion 2)",
                    rep.pose_exact_percent);
  return {acc, pose};
}

// ---- criterion 8: manifest determinism --------------------------------------------

Outcome criterion_determinism(const PegImageBank& small_bank, const Board& small) {
  Outcome o{8, "manifest determinism", false, ""};

  std::string tmpl = (fs::temp_directory_path() / "tactile_acceptance_XXXXXX").string();
  const fs::path root = mkdtemp(tmpl.data());
  const fs::path bank_dir = root / "bank";
  save_bank(bank_dir.string(), subset_bank(small_bank, 2),
            {small.shapes[0], small.shapes[1]});

  std::vector<std::string> notes;
  bool ok = true;
  const auto check = [&](const std::string& what, bool cond) {
    ok = ok && cond;
    if (!cond) notes.push_back(what);
  };

  // run (with observation noise, so the noise draw reproduces too)
  const std::string run1 = (root / "run1").string(), run2 = (root / "run2").string();
  check("run exit", run_cli("run --bank " + bank_dir.string() +
                            " --category A --pose-index 5 --flip-prob 0.05 --seed 3 --out " +
                            run1) == 0);
  check("run replay exit", run_cli("run --from-manifest " + run1 + "/run_manifest.json --out " +
                                   run2) == 0);
  check("transcript bytes", slurp(run1 + "/transcript.jsonl") == slurp(run2 + "/transcript.jsonl"));
  check("result bytes", slurp(run1 + "/result.json") == slurp(run2 + "/result.json"));

  // experiment
  const std::string e1 = (root / "exp1").string(), e2 = (root / "exp2").string();
  check("experiment exit", run_cli("experiment --bank " + bank_dir.string() +
                                   " --subsample 0.05 --K 80 --n-max 4 --seed 9 --out " + e1) == 0);
  check("experiment replay exit",
        run_cli("experiment --from-manifest " + e1 + "/run_manifest.json --out " + e2) == 0);
  for (const char* f : {"report.json", "report.csv", "entropy.csv"}) {
    check(std::string("experiment ") + f,
          slurp(e1 + "/" + f) == slurp(e2 + "/" + f));
  }

  // ablate
  const std::string a1 = (root / "abl1").string(), a2 = (root / "abl2").string();
  check("ablate exit", run_cli("ablate --bank " + bank_dir.string() +
                               " --subsample 0.05 --K 60 --n-max 4 --bootstrap 100 "
                               "--seed 2 --out " + a1) == 0);
  check("ablate replay exit",
        run_cli("ablate --from-manifest " + a1 + "/run_manifest.json --out " + a2) == 0);
  for (const char* f : {"ablate.json", "ablate.csv"}) {
    check(std::string("ablate ") + f, slurp(a1 + "/" + f) == slurp(a2 + "/" + f));
  }

  std::error_code ec;
  fs::remove_all(root, ec);

  o.pass = ok;
  if (ok) {
    o.detail = "run/experiment/ablate re-runs from their manifests reproduce transcripts "
               "and reports byte-for-byte (noisy run included)";
  } else {
    o.detail = "mismatches:";
    for (const std::string& n : notes) o.detail += " " + n + ";";
  }
  return o;
}

}  // namespace

int main() {
  const auto t_all = Clock::now();
  std::vector<Outcome> results;

  progress("building boards and banks");
  const Board small = make_board(GridKind::kSmall);
  const PegImageBank small_bank = build_bank(small.shapes, small.grid, small.window);
  const Board large = make_board(GridKind::kLarge);
  const PegImageBank large_bank = build_bank(large.shapes, large.grid, large.window);
  progress(fmt("banks ready (%zu + %zu entries), %.1fs", small_bank.entry_count(),
               large_bank.entry_count(), seconds_since(t_all)));

  progress("criterion 7: formula oracles");
  results.push_back(criterion_formulas());
  progress("criterion 1: exhaustive-Bayes equivalence");
  results.push_back(criterion_exhaustive());
  progress("criterion 10: step throughput");
  results.push_back(criterion_throughput(large_bank, large));
  progress("criterion 9: entropy monotonicity");
  results.push_back(criterion_entropy(small_bank, small));
  progress("criterion 6: pixel-baseline gap");
  results.push_back(criterion_baselines(small_bank, small));
  progress("criterion 8: manifest determinism");
  results.push_back(criterion_determinism(small_bank, small));
  progress("criterion 4: candidate-count sweep");
  results.push_back(criterion_class_sweep(large_bank, large));
  progress("criterion 3: policy ablation");
  results.push_back(criterion_ablation(large_bank, large));
  progress("criteria 2 + 5: identification run");
  const auto [acc, pose] = criterion_identification(large_bank, large);
  results.push_back(acc);
  results.push_back(pose);

  std::sort(results.begin(), results.end(),
            [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int failures = 0;
  std::printf("\n");
  for (const Outcome& o : results) {
    failures += !o.pass;
    std::printf("[%s] %2d. %s: %s\n", o.pass ? "PASS" : "FAIL", o.id, o.name.c_str(),
                o.detail.c_str());
  }
  std::printf("\nacceptance: %zu/%zu criteria passed, %.0fs total\n",
              results.size() - static_cast<size_t>(failures), results.size(),
              seconds_since(t_all));
  return failures;
}
