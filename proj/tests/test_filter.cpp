#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "tactile/bank.hpp"
#include "tactile/filter.hpp"
#include "tactile/rng.hpp"
#include "tactile/sensing.hpp"
#include "tactile/similarity.hpp"
#include "test_util.hpp"

using namespace tactile;

namespace {

// 2 categories, one pose, 8x8 window, patches rigged so the init scores under
// a sharpness-1 oracle come out (0.75, 0.25) exactly.
PegImageBank three_to_one_bank() {
  const SensorWindow w = testutil::tiny_window(8, 8);
  std::vector<float> a(64, 0.0f), b(64, 0.0f);
  for (int i = 0; i < 16; ++i) a[static_cast<size_t>(i)] = 1.0f;
  for (int i = 0; i < 48; ++i) b[static_cast<size_t>(i)] = 1.0f;
  return testutil::hand_bank({"A", "B"}, testutil::make_grid({0.0}, {0.0}, {0.0}), w,
                             {ContactPatch(8, 8, std::move(a)), ContactPatch(8, 8, std::move(b))});
}

// 3 rectangle categories on a 2x1x2 pose grid, rasterized for real.
struct ToyWorld {
  std::vector<ShapeSpec> shapes;
  PoseGrid grid;
  SensorWindow window;
  PegImageBank bank;
};

ToyWorld toy_world() {
  ToyWorld t;
  t.shapes = {testutil::make_rect("r86", 8.0, 6.0), testutil::make_rect("r104", 10.0, 4.0),
              testutil::make_rect("r66", 6.0, 6.0)};
  t.grid = testutil::make_grid({-2.0, 2.0}, {0.0}, {0.0, 30.0});
  t.window = testutil::tiny_window();
  t.bank = build_bank(t.shapes, t.grid, t.window, false);
  return t;
}

bool same_sets(const ParticleSet& a, const ParticleSet& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const Particle &p = a.particles[i], &q = b.particles[i];
    if (p.category != q.category || p.weight != q.weight) return false;
    if (p.pose.x != q.pose.x || p.pose.y != q.pose.y || p.pose.theta != q.pose.theta)
      return false;
    if (p.pose_index != q.pose_index || p.init_pose_index != q.init_pose_index) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init samples entries proportionally to their scores") {
  const PegImageBank bank = three_to_one_bank();
  const GeometricOracle model(1e-6, 1.0);
  const ContactPatch obs = ContactPatch::ones(8, 8);

  // sanity on the rigged scores themselves
  CHECK(model.score_hp(obs, bank.entry(0)) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(model.score_hp(obs, bank.entry(1)) == doctest::Approx(0.25).epsilon(1e-12));

  FilterConfig cfg;
  cfg.particle_count = 100000;
  const ParticleSet set = init_particles(obs, bank, model, cfg, 404);
  size_t first = 0;
  for (const Particle& p : set.particles) first += (p.category == 0);
  const double frac = static_cast<double>(first) / static_cast<double>(set.size());
  CHECK(std::abs(frac - 0.75) <= 0.01);
  CHECK(weight_sum(set) == doctest::Approx(1.0).epsilon(1e-9));
  for (size_t i = 0; i < 3; ++i) {
    CHECK(set.particles[i].weight == doctest::Approx(1.0 / 100000.0));
  }
}

TEST_CASE("single-entry bank puts every particle on that entry") {
  const SensorWindow w = testutil::tiny_window(8, 8);
  const PegImageBank bank =
      testutil::hand_bank({"only"}, testutil::make_grid({0.0}, {0.0}, {0.0}), w,
                          {ContactPatch::ones(8, 8)});
  const GeometricOracle model;
  FilterConfig cfg;
  const ParticleSet set =
      init_particles(ContactPatch::zeros(8, 8), bank, model, cfg, 1);
  REQUIRE(set.size() == 100);
  for (const Particle& p : set.particles) {
    CHECK(p.category == 0);
    CHECK(p.pose_index == 0);
    CHECK(p.init_pose_index == 0);
  }
}

TEST_CASE("uniform init respects the pose bounds") {
  const ToyWorld t = toy_world();
  const GeometricOracle model;
  FilterConfig cfg;
  cfg.init_mode = InitMode::kUniform;
  cfg.uniform_bounds.theta_max = 10.0;  // only theta = 0 qualifies
  const ParticleSet set =
      init_particles(ContactPatch::zeros(12, 16), t.bank, model, cfg, 5);
  for (const Particle& p : set.particles) {
    CHECK(p.pose.theta == 0.0);
  }
}

TEST_CASE("posterior_weights follows Bayes") {
  const auto post = posterior_weights({0.5, 0.5}, {0.9, 0.1});
  CHECK(post[0] == doctest::Approx(0.9));
  CHECK(post[1] == doctest::Approx(0.1));

  // uniform likelihoods leave the prior untouched
  const auto same = posterior_weights({0.8, 0.2}, {0.5, 0.5});
  CHECK(same[0] == doctest::Approx(0.8));
  CHECK(same[1] == doctest::Approx(0.2));

  // skewed prior times skewed likelihood
  const auto mixed = posterior_weights({0.75, 0.25}, {0.2, 0.8});
  CHECK(mixed[0] == doctest::Approx(0.15 / 0.35));
  CHECK(mixed[1] == doctest::Approx(0.20 / 0.35));

  CHECK_THROWS(posterior_weights({1.0, 0.0}, {0.0, 0.0}));
  CHECK_THROWS(posterior_weights({0.5, 0.5}, {0.5, -0.1}));
}

TEST_CASE("systematic resampling reproduces exact integer proportions") {
  Rng g(7);
  const auto idx = resample_indices({0.5, 0.3, 0.2}, 1000, ResampleScheme::kSystematic, g);
  REQUIRE(idx.size() == 1000);
  size_t counts[3] = {0, 0, 0};
  for (size_t i : idx) {
    REQUIRE(i < 3);
    ++counts[i];
  }
  CHECK(counts[0] == 500);
  CHECK(counts[1] == 300);
  CHECK(counts[2] == 200);
}

TEST_CASE("multinomial resampling is unbiased") {
  const std::vector<double> w = {0.5, 0.3, 0.2};
  const size_t k = 1000, rounds = 200;
  double mean[3] = {0.0, 0.0, 0.0};
  for (size_t r = 0; r < rounds; ++r) {
    Rng g(1000 + r);
    const auto idx = resample_indices(w, k, ResampleScheme::kMultinomial, g);
    for (size_t i : idx) mean[i] += 1.0;
  }
  for (int c = 0; c < 3; ++c) {
    const double frac = mean[c] / static_cast<double>(k * rounds);
    CHECK(std::abs(frac - w[static_cast<size_t>(c)]) <
          testutil::binom_band(k * rounds, w[static_cast<size_t>(c)]));
  }
}

TEST_CASE("apply_action moves along the displacement lattice") {
  const ToyWorld t = toy_world();
  Particle p;
  p.category = 1;
  p.pose = Pose2D{-2.0, 0.0, 0.0};
  p.pose_index = t.grid.snap(p.pose);
  REQUIRE(p.pose_index.has_value());
  p.init_pose_index = *p.pose_index;

  const Particle q = apply_action(p, Action{4.0, 0.0, 30.0}, t.bank);
  CHECK(q.pose.x == 2.0);
  CHECK(q.pose.theta == 30.0);
  REQUIRE(q.pose_index.has_value());
  CHECK(t.grid.pose_at(*q.pose_index).x == 2.0);
  CHECK(t.grid.pose_at(*q.pose_index).theta == 30.0);
  CHECK(q.init_pose_index == p.init_pose_index);
  CHECK(q.category == 1);

  // identity keeps the index
  const Particle still = apply_action(p, Action{}, t.bank);
  CHECK(still.pose_index == p.pose_index);

  // walking off the grid drops the bank index but keeps moving the pose
  const Particle off = apply_action(q, Action{4.0, 0.0, 0.0}, t.bank);
  CHECK(!off.pose_index.has_value());
  CHECK(off.pose.x == 6.0);
  CHECK(&t.bank.patch_for(off.category, off.pose_index) == &t.bank.no_contact);

  // and it can come back
  const Particle back = apply_action(off, Action{-4.0, 0.0, 0.0}, t.bank);
  CHECK(back.pose_index.has_value());
}

TEST_CASE("grid-pose example: (4,0,0) then (4,0,0) lands on (8,0,0)") {
  const PoseGrid g = make_pose_grid(GridKind::kSmall);
  const std::vector<ShapeSpec> shapes = {testutil::make_rect("r", 30.0, 30.0)};
  const SensorWindow w;
  const PegImageBank bank = build_bank(shapes, g, w, false);
  Particle p;
  p.pose = Pose2D{4.0, 0.0, 0.0};
  p.pose_index = g.snap(p.pose);
  REQUIRE(p.pose_index.has_value());
  const Particle q = apply_action(p, Action{4.0, 0.0, 0.0}, bank);
  REQUIRE(q.pose_index.has_value());
  const Pose2D landed = g.pose_at(*q.pose_index);
  CHECK(landed.x == 8.0);
  CHECK(landed.y == 0.0);
  CHECK(landed.theta == 0.0);
}

TEST_CASE("particle filter tracks an exhaustive Bayes update on the toy bank") {
  const ToyWorld t = toy_world();
  const GeometricOracle model(1e-6, 8.0);
  const size_t gt_cat = 1;
  const Pose2D gt0 = t.grid.pose_at(t.grid.index_of(1, 0, 0));  // (2, 0, 0)
  const NoiseModel clean;

  const ContactPatch first = observe_hole(t.shapes[gt_cat], gt0, t.window, clean, 0);
  FilterConfig cfg;
  cfg.particle_count = 5000;
  ParticleSet set = init_particles(first, t.bank, model, cfg, 31);
  testutil::ExhaustiveBayes ref(t.bank, model, first);

  // init draw already matches the normalized scores
  CHECK(testutil::tv_distance(class_posterior(set, 3), ref.class_marginal()) < 0.05);

  Pose2D gt = gt0;
  const Action script[] = {{-4.0, 0.0, 0.0}, {0.0, 0.0, 30.0}, {4.0, 0.0, -30.0}};
  int step = 0;
  for (const Action& a : script) {
    gt = compose(gt, a);
    const ContactPatch obs = observe_hole(t.shapes[gt_cat], gt, t.window, clean, 0);
    set = update(set, obs, a, t.bank, model, cfg, 100 + step);
    ref.step(a, obs);
    const double tv = testutil::tv_distance(class_posterior(set, 3), ref.class_marginal());
    CAPTURE(step);
    CHECK(tv < 0.05);
    ++step;
  }
}

TEST_CASE("update leaves K equal weights that sum to one") {
  const ToyWorld t = toy_world();
  const GeometricOracle model;
  const NoiseModel clean;
  const Pose2D gt = t.grid.pose_at(0);
  const ContactPatch first = observe_hole(t.shapes[0], gt, t.window, clean, 0);
  FilterConfig cfg;
  ParticleSet set = init_particles(first, t.bank, model, cfg, 9);
  const Action a{4.0, 0.0, 0.0};
  const ContactPatch obs = observe_hole(t.shapes[0], compose(gt, a), t.window, clean, 0);
  set = update(set, obs, a, t.bank, model, cfg, 10);
  REQUIRE(set.size() == 100);
  CHECK(weight_sum(set) == doctest::Approx(1.0).epsilon(1e-9));
  for (const Particle& p : set.particles) {
    CHECK(p.weight == doctest::Approx(0.01).epsilon(1e-12));
  }
}

TEST_CASE("updates are reproducible from the seed") {
  const ToyWorld t = toy_world();
  const GeometricOracle model;
  const NoiseModel clean;
  const Pose2D gt = t.grid.pose_at(2);
  const ContactPatch first = observe_hole(t.shapes[2], gt, t.window, clean, 0);
  FilterConfig cfg;
  const ParticleSet a0 = init_particles(first, t.bank, model, cfg, 77);
  const ParticleSet b0 = init_particles(first, t.bank, model, cfg, 77);
  CHECK(same_sets(a0, b0));

  const Action act{0.0, 0.0, 30.0};
  const ContactPatch obs = observe_hole(t.shapes[2], compose(gt, act), t.window, clean, 0);
  const ParticleSet a1 = update(a0, obs, act, t.bank, model, cfg, 5);
  const ParticleSet b1 = update(b0, obs, act, t.bank, model, cfg, 5);
  CHECK(same_sets(a1, b1));
}

TEST_CASE("noiseless truth mass ratchets upward") {
  const ToyWorld t = toy_world();
  const GeometricOracle model(1e-6, 8.0);
  const NoiseModel clean;
  const size_t gt_cat = 0;
  Pose2D gt = t.grid.pose_at(t.grid.index_of(0, 0, 1));  // (-2, 0, 30)
  const ContactPatch first = observe_hole(t.shapes[gt_cat], gt, t.window, clean, 0);
  FilterConfig cfg;
  cfg.particle_count = 2000;
  ParticleSet set = init_particles(first, t.bank, model, cfg, 13);

  const auto truth_fraction = [&](const ParticleSet& s, const Pose2D& pose) {
    size_t n = 0;
    for (const Particle& p : s.particles) {
      if (p.category == gt_cat && p.pose.x == pose.x && p.pose.y == pose.y &&
          p.pose.theta == pose.theta)
        ++n;
    }
    return static_cast<double>(n) / static_cast<double>(s.size());
  };

  double prev = truth_fraction(set, gt);
  const Action script[] = {{4.0, 0.0, -30.0}, {-4.0, 0.0, 30.0}, {0.0, 0.0, -30.0},
                           {0.0, 0.0, 30.0}};
  int step = 0;
  for (const Action& a : script) {
    gt = compose(gt, a);
    const ContactPatch obs = observe_hole(t.shapes[gt_cat], gt, t.window, clean, 0);
    set = update(set, obs, a, t.bank, model, cfg, 500 + step);
    const double now = truth_fraction(set, gt);
    CHECK(now >= prev - 2.0 / 2000.0);  // resampling granularity
    prev = now;
    ++step;
  }
  CHECK(prev > 0.5);  // and it actually converges on the truth
}

TEST_CASE("termination needs the posterior to clear delta_prob strictly") {
  ParticleSet set;
  for (int i = 0; i < 100; ++i) {
    Particle p;
    p.category = i < 95 ? 0 : 1;
    p.weight = 0.01;
    set.particles.push_back(p);
  }
  FilterConfig cfg;  // delta_prob 0.95
  CHECK(!should_terminate(set, cfg, 2));
  set.particles[95].category = 0;  // 96%
  CHECK(should_terminate(set, cfg, 2));

  cfg.delta_prob = 1.0;  // can never be strictly exceeded
  for (Particle& p : set.particles) p.category = 0;
  CHECK(!should_terminate(set, cfg, 2));
}

TEST_CASE("class_posterior counts particles per category") {
  ParticleSet set;
  for (int i = 0; i < 10; ++i) {
    Particle p;
    p.category = i < 6 ? 0 : 2;
    p.weight = 0.1;
    set.particles.push_back(p);
  }
  const auto post = class_posterior(set, 3);
  REQUIRE(post.size() == 3);
  CHECK(post[0] == doctest::Approx(0.6));
  CHECK(post[1] == doctest::Approx(0.0));
  CHECK(post[2] == doctest::Approx(0.4));
}

TEST_CASE("best_particle applies the documented tie rules") {
  ParticleSet set;
  const auto add = [&](size_t cat, double x, double w) {
    Particle p;
    p.category = cat;
    p.pose = Pose2D{x, 0.0, 0.0};
    p.weight = w;
    set.particles.push_back(p);
  };

  add(0, 0.0, 0.2);
  add(1, 1.0, 0.5);
  add(2, 2.0, 0.3);
  CHECK(best_particle(set).category == 1);

  // equal weights: the most duplicated hypothesis wins
  set.particles.clear();
  add(1, 4.0, 0.25);
  add(0, 0.0, 0.25);
  add(1, 4.0, 0.25);
  add(2, 2.0, 0.25);
  const Particle& modal = best_particle(set);
  CHECK(modal.category == 1);
  CHECK(modal.pose.x == 4.0);

  // full tie: lowest category, then lexicographic pose
  set.particles.clear();
  add(2, 0.0, 0.25);
  add(1, 8.0, 0.25);
  add(1, -8.0, 0.25);
  add(3, 0.0, 0.25);
  const Particle& low = best_particle(set);
  CHECK(low.category == 1);
  CHECK(low.pose.x == -8.0);
}

TEST_CASE("pose_estimate reports the best particle and weighted errors") {
  ParticleSet set;
  Particle a;
  a.category = 0;
  a.pose = Pose2D{4.0, 0.0, 0.0};
  a.weight = 0.75;
  Particle b;
  b.category = 1;
  b.pose = Pose2D{0.0, 3.0, 30.0};
  b.weight = 0.25;
  set.particles = {a, b};

  const PoseEstimate est = pose_estimate(set, Pose2D{0.0, 0.0, 0.0});
  CHECK(est.category == 0);
  CHECK(est.pose.x == 4.0);
  REQUIRE(est.err_xy.has_value());
  CHECK(*est.err_xy == doctest::Approx(0.75 * 4.0 + 0.25 * 3.0));
  CHECK(*est.err_theta == doctest::Approx(0.25 * 30.0));

  const PoseEstimate bare = pose_estimate(set);
  CHECK(!bare.err_xy.has_value());
}

TEST_CASE("jitter hops stay on the grid and preserve the action chain") {
  const ToyWorld t = toy_world();
  const GeometricOracle model(1e-6, 2.0);  // soft scores keep the set diverse
  const NoiseModel clean;
  const size_t gt_cat = 2;
  Pose2D gt = t.grid.pose_at(0);
  const ContactPatch first = observe_hole(t.shapes[gt_cat], gt, t.window, clean, 0);
  FilterConfig cfg;
  cfg.particle_count = 500;
  cfg.jitter = 0.4;
  ParticleSet set = init_particles(first, t.bank, model, cfg, 21);

  Action total{};
  const Action script[] = {{4.0, 0.0, 0.0}, {0.0, 0.0, 30.0}, {-4.0, 0.0, 0.0}};
  int step = 0;
  for (const Action& a : script) {
    gt = compose(gt, a);
    total = compose(total, a);
    const ContactPatch obs = observe_hole(t.shapes[gt_cat], gt, t.window, clean, 0);
    set = update(set, obs, a, t.bank, model, cfg, 900 + step);
    size_t on_grid = 0;
    for (const Particle& p : set.particles) {
      if (p.pose_index.has_value()) {
        ++on_grid;
        const Pose2D at = t.grid.pose_at(*p.pose_index);
        CHECK(p.pose.x == at.x);
        CHECK(p.pose.y == at.y);
        CHECK(p.pose.theta == at.theta);
      }
      REQUIRE(p.init_pose_index < t.grid.size());
      // displacement from the remembered start must equal the executed chain,
      // jitter hops included (they shift both endpoints together; particles
      // that wandered off the grid never jitter, so it holds for them too)
      const Action got = action_between(t.grid.pose_at(p.init_pose_index), p.pose);
      CHECK(got.dx == doctest::Approx(total.dx));
      CHECK(got.dy == doctest::Approx(total.dy));
      CHECK(got.dtheta == doctest::Approx(wrap_degrees(total.dtheta)));
    }
    CHECK(on_grid > 0);  // the surviving mass is mostly real hypotheses
    ++step;
  }

  // jittered runs stay seed-reproducible
  ParticleSet again = init_particles(first, t.bank, model, cfg, 21);
  gt = t.grid.pose_at(0);
  step = 0;
  for (const Action& a : script) {
    gt = compose(gt, a);
    const ContactPatch obs = observe_hole(t.shapes[gt_cat], gt, t.window, clean, 0);
    again = update(again, obs, a, t.bank, model, cfg, 900 + step);
    ++step;
  }
  CHECK(same_sets(set, again));
}

TEST_CASE("filter config validation") {
  FilterConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.particle_count = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FilterConfig{};
  cfg.delta_prob = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FilterConfig{};
  cfg.delta_prob = 1.0;
  CHECK_NOTHROW(cfg.validate());
  cfg = FilterConfig{};
  cfg.jitter = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FilterConfig{};
  cfg.jitter = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FilterConfig{};
  cfg.max_interactions = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FilterConfig{};
  cfg.delta_act = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  const ToyWorld t = toy_world();
  FilterConfig d;
  CHECK(d.resolved_delta_act(t.bank) == doctest::Approx(t.bank.delta_act));
  d.delta_act = 7.5;
  CHECK(d.resolved_delta_act(t.bank) == 7.5);
}
