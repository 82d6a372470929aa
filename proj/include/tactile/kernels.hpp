#pragma once

#include <span>
#include <vector>

#include "tactile/bank.hpp"
#include "tactile/patch.hpp"
#include "tactile/similarity.hpp"

namespace tactile::kernels {

// Hole-vs-peg scores of one observation against a list of patches. The
// parallel variant distributes rows over OpenMP threads; every slot is
// written independently, so results are bit-identical to the serial
// reference for any thread count.
std::vector<double> score_hp_batch_serial(const SimilarityModel& model,
                                          const ContactPatch& obs,
                                          std::span<const ContactPatch* const> patches);
std::vector<double> score_hp_batch(const SimilarityModel& model,
                                   const ContactPatch& obs,
                                   std::span<const ContactPatch* const> patches,
                                   bool parallel = true);

// Scores of one observation against every bank entry, in entry order.
std::vector<double> score_hp_bank(const SimilarityModel& model, const ContactPatch& obs,
                                  const PegImageBank& bank, bool parallel = true);

// Rasterization of all categories x grid poses, in bank entry order.
std::vector<ContactPatch> rasterize_entries_serial(const std::vector<ShapeSpec>& shapes,
                                                   const PoseGrid& grid,
                                                   const SensorWindow& window);
std::vector<ContactPatch> rasterize_entries(const std::vector<ShapeSpec>& shapes,
                                            const PoseGrid& grid,
                                            const SensorWindow& window,
                                            bool parallel = true);

}  // namespace tactile::kernels
