#include "tactile/kernels.hpp"

#include <cstdint>

namespace tactile::kernels {

std::vector<double> score_hp_batch_serial(const SimilarityModel& model,
                                          const ContactPatch& obs,
                                          std::span<const ContactPatch* const> patches) {
  std::vector<double> scores(patches.size());
  for (size_t i = 0; i < patches.size(); ++i)
    scores[i] = model.score_hp(obs, *patches[i]);
  return scores;
}

std::vector<double> score_hp_batch(const SimilarityModel& model,
                                   const ContactPatch& obs,
                                   std::span<const ContactPatch* const> patches,
                                   bool parallel) {
  if (!parallel) return score_hp_batch_serial(model, obs, patches);
  std::vector<double> scores(patches.size());
  const auto n = static_cast<int64_t>(patches.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    scores[static_cast<size_t>(i)] = model.score_hp(obs, *patches[static_cast<size_t>(i)]);
  return scores;
}

std::vector<double> score_hp_bank(const SimilarityModel& model, const ContactPatch& obs,
                                  const PegImageBank& bank, bool parallel) {
  std::vector<const ContactPatch*> ptrs(bank.entry_count());
  for (size_t i = 0; i < ptrs.size(); ++i) ptrs[i] = &bank.entry(i);
  return score_hp_batch(model, obs, ptrs, parallel);
}

std::vector<ContactPatch> rasterize_entries_serial(const std::vector<ShapeSpec>& shapes,
                                                   const PoseGrid& grid,
                                                   const SensorWindow& window) {
  std::vector<ContactPatch> out(shapes.size() * grid.size());
  for (size_t c = 0; c < shapes.size(); ++c)
    for (size_t p = 0; p < grid.size(); ++p)
      out[c * grid.size() + p] = rasterize(shapes[c], grid.pose_at(p), window);
  return out;
}

std::vector<ContactPatch> rasterize_entries(const std::vector<ShapeSpec>& shapes,
                                            const PoseGrid& grid,
                                            const SensorWindow& window, bool parallel) {
  if (!parallel) return rasterize_entries_serial(shapes, grid, window);
  std::vector<ContactPatch> out(shapes.size() * grid.size());
  const auto n = static_cast<int64_t>(out.size());
  const auto per_cat = static_cast<int64_t>(grid.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    size_t c = static_cast<size_t>(i / per_cat);
    size_t p = static_cast<size_t>(i % per_cat);
    out[static_cast<size_t>(i)] = rasterize(shapes[c], grid.pose_at(p), window);
  }
  return out;
}

}  // namespace tactile::kernels
