// Timing comparison of the OpenMP kernels against their serial references,
// plus the end-to-end filter step the interactive loop depends on.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tactile/action.hpp"
#include "tactile/bank.hpp"
#include "tactile/filter.hpp"
#include "tactile/harness.hpp"
#include "tactile/kernels.hpp"
#include "tactile/rng.hpp"
#include "tactile/sensing.hpp"
#include "tactile/similarity.hpp"

using namespace tactile;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Best of `rounds` timings of f(), in milliseconds.
template <typename F>
double best_ms(int rounds, F&& f) {
  double best = 1e300;
  for (int r = 0; r < rounds; ++r) {
    const auto t0 = Clock::now();
    f();
    const double ms = ms_since(t0);
    if (ms < best) best = ms;
  }
  return best;
}

void row(const std::string& name, double serial_ms, double parallel_ms) {
  std::printf("%-34s %10.3f %12.3f %9.2fx\n", name.c_str(), serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
  std::printf("OpenMP: not enabled (parallel timings run the serial path)\n\n");
#endif

  const Board board = make_board(GridKind::kLarge);
  std::printf("board: %zu glyphs x %zu poses, sensor %dx%d\n\n", board.shapes.size(),
              board.grid.size(), board.window.cols, board.window.rows);

  std::printf("%-34s %10s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

  // -- rasterization of the whole bank ---------------------------------------
  std::vector<ContactPatch> entries;
  const double rast_serial = best_ms(2, [&] {
    entries = kernels::rasterize_entries_serial(board.shapes, board.grid, board.window);
  });
  const double rast_parallel = best_ms(2, [&] {
    entries = kernels::rasterize_entries(board.shapes, board.grid, board.window, true);
  });
  row("rasterize_entries (" + std::to_string(entries.size()) + ")", rast_serial,
      rast_parallel);

  PegImageBank bank;
  bank.categories.reserve(board.shapes.size());
  for (const ShapeSpec& s : board.shapes) bank.categories.push_back(s.category_id);
  bank.grid = board.grid;
  bank.window = board.window;
  bank.patches = std::move(entries);
  bank.delta_act = default_delta_act(board.window);
  bank.no_contact = no_contact_image(board.window);

  // -- hole-vs-peg scoring over every entry ----------------------------------
  const GeometricOracle model;
  const NoiseModel clean;
  const ContactPatch obs = observe_hole(board.shapes[4], bank.grid.pose_at(423),
                                        bank.window, clean, 7);
  std::vector<double> scores;
  const double score_serial = best_ms(3, [&] {
    scores = kernels::score_hp_bank(model, obs, bank, false);
  });
  const double score_parallel = best_ms(3, [&] {
    scores = kernels::score_hp_bank(model, obs, bank, true);
  });
  row("score_hp_bank (" + std::to_string(scores.size()) + ")", score_serial,
      score_parallel);

  // -- L1 distance: quantized integer path vs float reference ----------------
  {
    Rng g(3);
    std::vector<float> a(static_cast<size_t>(bank.window.cell_count()));
    std::vector<float> b(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<float>(static_cast<int>(uniform01(g) * 5.0)) * 0.25f;
      b[i] = static_cast<float>(static_cast<int>(uniform01(g) * 5.0)) * 0.25f;
    }
    const ContactPatch pa(bank.window.rows, bank.window.cols, a);
    const ContactPatch pb(bank.window.rows, bank.window.cols, b);
    volatile double sink = 0.0;
    const int reps = 20000;
    const double l1_float = best_ms(3, [&] {
      double s = 0.0;
      for (int i = 0; i < reps; ++i) s += l1_distance_reference(pa, pb);
      sink = s;
    });
    const double l1_int = best_ms(3, [&] {
      double s = 0.0;
      for (int i = 0; i < reps; ++i) s += l1_distance(pa, pb);
      sink = s;
    });
    (void)sink;
    std::printf("%-34s %10.3f %12.3f %9.2fx   (float vs integer, %d reps)\n",
                "l1_distance", l1_float, l1_int, l1_float / l1_int, reps);
  }

  // -- one full interactive step: weight K particles, score every action -----
  {
    FilterConfig cfg;  // K = 100
    ParticleSet set = init_particles(obs, bank, model, cfg, 11);
    const Action step{4.0, 0.0, 0.0};
    const ContactPatch obs2 = observe_hole(board.shapes[4],
                                           compose(bank.grid.pose_at(423), step),
                                           bank.window, clean, 8);
    ParticleSet updated;
    const double upd_serial = best_ms(3, [&] {
      FilterConfig c = cfg;
      c.parallel = false;
      updated = update(set, obs2, step, bank, model, c, 5);
    });
    const double upd_parallel = best_ms(3, [&] {
      updated = update(set, obs2, step, bank, model, cfg, 5);
    });
    row("filter update (K=100)", upd_serial, upd_parallel);

    ActionChoice choice;
    const double sel_serial = best_ms(3, [&] {
      FilterConfig c = cfg;
      c.parallel = false;
      choice = select_action(updated, bank, model, c);
    });
    const double sel_parallel = best_ms(3, [&] {
      choice = select_action(updated, bank, model, cfg);
    });
    row("select_action (" + std::to_string(choice.n_feasible) + " feasible)",
        sel_serial, sel_parallel);

    std::printf("\nfull step (update + select): %.3f ms serial, %.3f ms parallel\n",
                upd_serial + sel_serial, upd_parallel + sel_parallel);
  }
  return 0;
}
