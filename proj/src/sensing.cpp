#include "tactile/sensing.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "tactile/rng.hpp"

namespace tactile {

void NoiseModel::validate() const {
  if (!(flip_prob >= 0.0) || flip_prob >= 1.0)
    throw std::invalid_argument("NoiseModel: flip_prob must be in [0, 1)");
  if (blur_radius < 0.0 || jitter_x_mm < 0.0 || jitter_y_mm < 0.0 ||
      jitter_theta_deg < 0.0)
    throw std::invalid_argument("NoiseModel: negative noise parameter");
}

bool NoiseModel::enabled() const {
  return flip_prob > 0.0 || blur_radius >= 1.0 || jitter_x_mm > 0.0 ||
         jitter_y_mm > 0.0 || jitter_theta_deg > 0.0;
}

ContactPatch no_contact_image(const SensorWindow& window) {
  return ContactPatch::zeros(window.rows, window.cols);
}

double default_delta_act(const SensorWindow& window) {
  return 0.01 * window.cell_count();
}

namespace {

std::vector<float> box_blur(const std::vector<float>& in, int rows, int cols, int r) {
  // Separable box blur with zero padding (outside the window reads as no
  // contact); the kernel weight stays (2r+1) so values remain in [0, 1].
  std::vector<float> tmp(in.size()), out(in.size());
  double norm = 1.0 / (2 * r + 1);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        int xx = x + k;
        if (xx >= 0 && xx < cols) acc += in[static_cast<size_t>(y) * cols + xx];
      }
      tmp[static_cast<size_t>(y) * cols + x] = static_cast<float>(acc * norm);
    }
  }
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        int yy = y + k;
        if (yy >= 0 && yy < rows) acc += tmp[static_cast<size_t>(yy) * cols + x];
      }
      out[static_cast<size_t>(y) * cols + x] = static_cast<float>(acc * norm);
    }
  }
  return out;
}

ContactPatch corrupt(ContactPatch clean, const NoiseModel& noise, Rng& g) {
  if (noise.blur_radius < 1.0 && noise.flip_prob <= 0.0) return clean;
  std::vector<float> cells = clean.cells();
  if (noise.blur_radius >= 1.0)
    cells = box_blur(cells, clean.rows(), clean.cols(),
                     static_cast<int>(noise.blur_radius));
  if (noise.flip_prob > 0.0) {
    for (float& v : cells)
      if (uniform01(g) < noise.flip_prob) v = 1.0f - v;
  }
  return ContactPatch(clean.rows(), clean.cols(), std::move(cells));
}

Pose2D jittered(const Pose2D& pose, const NoiseModel& noise, Rng& g) {
  if (noise.jitter_x_mm <= 0.0 && noise.jitter_y_mm <= 0.0 &&
      noise.jitter_theta_deg <= 0.0)
    return pose;
  Action wobble{normal(g, noise.jitter_x_mm), normal(g, noise.jitter_y_mm),
                normal(g, noise.jitter_theta_deg)};
  return compose(pose, wobble);
}

}  // namespace

ContactPatch observe_peg(const ShapeSpec& shape, const Pose2D& pose,
                         const SensorWindow& window, const NoiseModel& noise,
                         uint64_t seed) {
  noise.validate();
  if (!noise.enabled()) return rasterize(shape, pose, window);
  Rng g(seed);
  return corrupt(rasterize(shape, jittered(pose, noise, g), window), noise, g);
}

ContactPatch observe_hole(const ShapeSpec& shape, const Pose2D& pose,
                          const SensorWindow& window, const NoiseModel& noise,
                          uint64_t seed, std::optional<double> plate_margin_mm) {
  noise.validate();
  if (!noise.enabled()) return hole_rasterize(shape, pose, window, plate_margin_mm);
  Rng g(seed);
  return corrupt(hole_rasterize(shape, jittered(pose, noise, g), window, plate_margin_mm),
                 noise, g);
}

void write_patch_sidecar(const std::string& path, const std::string& category,
                         const Pose2D& pose, int index) {
  nlohmann::json j;
  j["category"] = category;
  j["pose"] = {{"x", pose.x}, {"y", pose.y}, {"theta", pose.theta}};
  j["index"] = index;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace tactile
