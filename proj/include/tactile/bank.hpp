#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tactile/geometry.hpp"
#include "tactile/patch.hpp"

namespace tactile {

// Dense peg print collection over categories x grid poses, all at one sensor
// resolution. Entry index = category_index * grid.size() + pose_index. Poses
// that see no material simply hold the all-zero no-contact image.
struct PegImageBank {
  std::vector<std::string> categories;
  PoseGrid grid;
  SensorWindow window;
  std::vector<ContactPatch> patches;
  double delta_act = 0.0;  // actuation threshold recorded with the bank

  size_t entry_count() const { return patches.size(); }
  size_t entry_index(size_t category, size_t pose_index) const {
    return category * grid.size() + pose_index;
  }
  size_t category_of(size_t entry) const { return entry / grid.size(); }
  size_t pose_index_of(size_t entry) const { return entry % grid.size(); }
  const ContactPatch& entry(size_t index) const { return patches[index]; }

  // Bank patch for a hypothesis: its category at a snapped pose, or the
  // no-contact image when the pose falls outside the collected grid.
  const ContactPatch& patch_for(size_t category, std::optional<size_t> pose_index) const {
    return pose_index.has_value() ? patches[entry_index(category, *pose_index)]
                                  : no_contact;
  }

  ContactPatch no_contact;

  void validate() const;
};

PegImageBank build_bank(const std::vector<ShapeSpec>& shapes, const PoseGrid& grid,
                        const SensorWindow& window, bool parallel = true);

// Bank restricted to the first n categories (candidate-set sweeps).
PegImageBank subset_bank(const PegImageBank& bank, size_t n_categories);

// On-disk layout: <dir>/manifest.json, entry_%06zu.tfp + .json sidecars, and
// shapes/<category>.json copies so a bank directory is self-contained.
void save_bank(const std::string& dir, const PegImageBank& bank,
               const std::vector<ShapeSpec>& shapes);

struct LoadedBank {
  PegImageBank bank;
  std::vector<ShapeSpec> shapes;
};

LoadedBank load_bank(const std::string& dir);

}  // namespace tactile
