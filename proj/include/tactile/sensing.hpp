#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tactile/geometry.hpp"
#include "tactile/patch.hpp"

namespace tactile {

// Observation corruption, applied in order: pose jitter, blur, cell flips.
// All fields zero means the observation path is exact and seed-independent.
struct NoiseModel {
  double flip_prob = 0.0;        // per-cell probability of v -> 1 - v
  double blur_radius = 0.0;      // box blur radius in pixels (rounded down)
  double jitter_x_mm = 0.0;      // stddev of pose jitter per component
  double jitter_y_mm = 0.0;
  double jitter_theta_deg = 0.0;

  void validate() const;
  bool enabled() const;
};

ContactPatch no_contact_image(const SensorWindow& window);

// Simulated sensor read of a peg (material occupancy) at the given pose.
ContactPatch observe_peg(const ShapeSpec& shape, const Pose2D& pose,
                         const SensorWindow& window, const NoiseModel& noise,
                         uint64_t seed);

// Simulated sensor read of the mating hole: the plate complement of the peg.
ContactPatch observe_hole(const ShapeSpec& shape, const Pose2D& pose,
                          const SensorWindow& window, const NoiseModel& noise,
                          uint64_t seed,
                          std::optional<double> plate_margin_mm = std::nullopt);

// Default actuation threshold: 1% of the cell count.
double default_delta_act(const SensorWindow& window);

// JSON sidecar written next to patch containers (pose + category metadata).
void write_patch_sidecar(const std::string& path, const std::string& category,
                         const Pose2D& pose, int index);

}  // namespace tactile
