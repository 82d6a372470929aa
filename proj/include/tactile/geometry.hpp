#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tactile/patch.hpp"

namespace tactile {

// Map an angle in degrees into (-180, 180].
double wrap_degrees(double deg);

// Relative SE(2) motion of the sensor: translation in the part frame plus a
// rotation about the sensor's own center, the way a wrist-mounted sensor is
// commanded. Components live on the pose-grid difference lattice.
struct Action {
  double dx = 0.0, dy = 0.0, dtheta = 0.0;  // mm, mm, degrees
};

// Planar displacement of the sensor from the object center: translation in
// the object frame, rotation in degrees normalized to (-180, 180].
struct Pose2D {
  double x = 0.0, y = 0.0, theta = 0.0;
};

Pose2D compose(const Pose2D& pose, const Action& motion);
Action compose(const Action& first, const Action& then);
Action inverse(const Action& a);
// The action a with compose(from, a) == to.
Action action_between(const Pose2D& from, const Pose2D& to);

struct SensorWindow {
  double width_mm = 18.6;
  double height_mm = 14.3;
  int cols = 64;
  int rows = 48;

  void validate() const;
  double pitch_x() const { return width_mm / cols; }
  double pitch_y() const { return height_mm / rows; }
  int cell_count() const { return rows * cols; }
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

// One outer ring plus optional hole loops, coordinates in mm in the shape
// frame (origin at the shape center).
struct PolygonWithHoles {
  std::vector<Vec2> outer;
  std::vector<std::vector<Vec2>> holes;
};

// Binary occupancy alternative to polygons, centered on the shape origin.
struct ShapeRaster {
  double pitch_mm = 0.0;
  int rows = 0, cols = 0;
  std::vector<uint8_t> mask;  // row-major, row 0 at the top (max y)
};

struct ShapeSpec {
  std::string category_id;
  std::vector<PolygonWithHoles> polygons;
  std::optional<ShapeRaster> raster;

  void validate() const;
  bool contains(double x_mm, double y_mm) const;
  std::array<double, 4> bounding_box() const;  // {xmin, ymin, xmax, ymax}
};

// Cartesian product of strictly increasing axis value lists. Pose index
// layout: ((ix * |y|) + iy) * |theta| + itheta.
struct PoseGrid {
  std::vector<double> x_values, y_values, theta_values;

  void validate() const;
  size_t size() const {
    return x_values.size() * y_values.size() * theta_values.size();
  }
  size_t index_of(size_t ix, size_t iy, size_t it) const {
    return (ix * y_values.size() + iy) * theta_values.size() + it;
  }
  Pose2D pose_at(size_t index) const;

  // Nearest grid pose per axis; empty when any coordinate falls beyond half
  // the local grid spacing outside the sampled range (theta compared on the
  // wrapped difference). Axes with a single value accept any coordinate.
  std::optional<size_t> snap(const Pose2D& p) const;
  // Nearest grid pose with no rejection, used to anchor action enumeration.
  size_t snap_clamped(const Pose2D& p) const;
};

enum class GridKind { kSmall, kLarge };

PoseGrid make_pose_grid(GridKind kind);
PoseGrid make_pose_grid(std::vector<double> xs, std::vector<double> ys,
                        std::vector<double> thetas);

// Anti-aliased occupancy of the shape under the sensor window at the given
// pose, 2x2 supersampled per pixel; deterministic.
ContactPatch rasterize(const ShapeSpec& shape, const Pose2D& pose,
                       const SensorWindow& window);

// Complement image: plate minus peg, clamped to [0, 1]. The plate defaults to
// the full window; with a margin it is the shape bounding box grown by
// margin_mm, rasterized at the same pose.
ContactPatch hole_rasterize(const ShapeSpec& shape, const Pose2D& pose,
                            const SensorWindow& window,
                            std::optional<double> plate_margin_mm = std::nullopt);

struct MazeParams {
  int walls = 24;                 // number of wall pieces to emit (capped by layout)
  double perturb_mm = 0.8;        // uniform jitter applied to each wall
  int cells_x = 6, cells_y = 5;   // maze lattice
  double cell_mm = 8.0;
  double wall_thickness_mm = 2.4;
};

// Deterministic procedural training board: a seeded maze whose walls are
// emitted as independent perturbed rectangles.
std::vector<ShapeSpec> generate_maze_board(uint64_t seed,
                                           const MazeParams& params = {});

struct GlyphScale {
  double width_mm = 40.0;
  double height_mm = 32.0;
};

inline GlyphScale glyph_scale_small() { return {16.0, 12.0}; }
inline GlyphScale glyph_scale_large() { return {40.0, 32.0}; }

// Names of the built-in letterforms.
std::vector<std::string> glyph_names();

// Built-in blocky letterforms scaled so each fits a width x height box.
// Unknown names are rejected.
std::vector<ShapeSpec> glyph_library(const std::vector<std::string>& names,
                                     const GlyphScale& scale);

void write_shape_json(const std::string& path, const ShapeSpec& shape);
ShapeSpec read_shape_json(const std::string& path);

}  // namespace tactile
