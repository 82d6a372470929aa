#include "tactile/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "tactile/encode.hpp"
#include "tactile/rng.hpp"

namespace tactile {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool point_in_ring(const std::vector<Vec2>& ring, double x, double y) {
  bool in = false;
  size_t n = ring.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y > y) != (b.y > y)) {
      double xint = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xint) in = !in;
    }
  }
  return in;
}

int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (v > 1e-12) return 1;
  if (v < -1e-12) return -1;
  return 0;
}

bool proper_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  return orient(a, b, c) * orient(a, b, d) < 0 &&
         orient(c, d, a) * orient(c, d, b) < 0;
}

void validate_ring(const std::vector<Vec2>& ring, const char* what) {
  if (ring.size() < 3)
    throw std::invalid_argument(std::string("ShapeSpec: ") + what +
                                " ring needs at least 3 vertices");
  for (const Vec2& v : ring)
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw std::invalid_argument("ShapeSpec: non-finite vertex");
  size_t n = ring.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (proper_cross(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]))
        throw std::invalid_argument(std::string("ShapeSpec: self-intersecting ") + what +
                                    " ring");
    }
  }
}

}  // namespace

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

// Motions translate in the part frame and rotate the sensor about its own
// center, so actions between displacement-grid poses are plain component
// differences and grid poses stay on the grid under every action.
Pose2D compose(const Pose2D& pose, const Action& motion) {
  return {pose.x + motion.dx, pose.y + motion.dy,
          wrap_degrees(pose.theta + motion.dtheta)};
}

Action compose(const Action& first, const Action& then) {
  return {first.dx + then.dx, first.dy + then.dy,
          wrap_degrees(first.dtheta + then.dtheta)};
}

Action inverse(const Action& a) {
  return {-a.dx, -a.dy, wrap_degrees(-a.dtheta)};
}

Action action_between(const Pose2D& from, const Pose2D& to) {
  return {to.x - from.x, to.y - from.y, wrap_degrees(to.theta - from.theta)};
}

void SensorWindow::validate() const {
  if (!(width_mm > 0.0) || !(height_mm > 0.0))
    throw std::invalid_argument("SensorWindow: dimensions must be positive");
  if (cols < 8 || rows < 8)
    throw std::invalid_argument("SensorWindow: resolution must be at least 8x8");
  // Near-square pixels. The reference sensor geometry itself (18.6 x 14.3 mm
  // on a 4:3 pixel grid) carries a ~2.5% pitch mismatch, so the tolerance
  // admits that while still rejecting grossly anisotropic windows.
  double mismatch = std::abs(pitch_x() / pitch_y() - 1.0);
  if (mismatch > 0.03)
    throw std::invalid_argument("SensorWindow: pixel pitch mismatch exceeds 3%");
}

void ShapeSpec::validate() const {
  if (category_id.empty())
    throw std::invalid_argument("ShapeSpec: empty category_id");
  if (polygons.empty() && !raster.has_value())
    throw std::invalid_argument("ShapeSpec: needs polygons or a raster");
  for (const auto& poly : polygons) {
    validate_ring(poly.outer, "outer");
    for (const auto& h : poly.holes) validate_ring(h, "hole");
  }
  if (raster.has_value()) {
    const ShapeRaster& r = *raster;
    if (r.pitch_mm <= 0.0 || r.rows <= 0 || r.cols <= 0)
      throw std::invalid_argument("ShapeSpec: bad raster geometry");
    if (r.mask.size() != static_cast<size_t>(r.rows) * r.cols)
      throw std::invalid_argument("ShapeSpec: raster mask size mismatch");
    if (std::find(r.mask.begin(), r.mask.end(), uint8_t{1}) == r.mask.end() &&
        polygons.empty())
      throw std::invalid_argument("ShapeSpec: raster has no occupied cell");
  }
}

bool ShapeSpec::contains(double x, double y) const {
  for (const auto& poly : polygons) {
    if (point_in_ring(poly.outer, x, y)) {
      bool in_hole = false;
      for (const auto& h : poly.holes) {
        if (point_in_ring(h, x, y)) {
          in_hole = true;
          break;
        }
      }
      if (!in_hole) return true;
    }
  }
  if (raster.has_value()) {
    const ShapeRaster& r = *raster;
    double half_w = 0.5 * r.cols * r.pitch_mm;
    double half_h = 0.5 * r.rows * r.pitch_mm;
    if (x >= -half_w && x < half_w && y > -half_h && y <= half_h) {
      int c = static_cast<int>(std::floor((x + half_w) / r.pitch_mm));
      int row = static_cast<int>(std::floor((half_h - y) / r.pitch_mm));
      c = std::clamp(c, 0, r.cols - 1);
      row = std::clamp(row, 0, r.rows - 1);
      if (r.mask[static_cast<size_t>(row) * r.cols + c]) return true;
    }
  }
  return false;
}

std::array<double, 4> ShapeSpec::bounding_box() const {
  double xmin = 1e30, ymin = 1e30, xmax = -1e30, ymax = -1e30;
  for (const auto& poly : polygons) {
    for (const Vec2& v : poly.outer) {
      xmin = std::min(xmin, v.x);
      ymin = std::min(ymin, v.y);
      xmax = std::max(xmax, v.x);
      ymax = std::max(ymax, v.y);
    }
  }
  if (raster.has_value()) {
    double half_w = 0.5 * raster->cols * raster->pitch_mm;
    double half_h = 0.5 * raster->rows * raster->pitch_mm;
    xmin = std::min(xmin, -half_w);
    ymin = std::min(ymin, -half_h);
    xmax = std::max(xmax, half_w);
    ymax = std::max(ymax, half_h);
  }
  return {xmin, ymin, xmax, ymax};
}

void PoseGrid::validate() const {
  auto check = [](const std::vector<double>& vals, const char* axis) {
    if (vals.empty())
      throw std::invalid_argument(std::string("PoseGrid: empty ") + axis + " axis");
    for (size_t i = 0; i < vals.size(); ++i) {
      if (!std::isfinite(vals[i]))
        throw std::invalid_argument("PoseGrid: non-finite axis value");
      if (i > 0 && !(vals[i] > vals[i - 1]))
        throw std::invalid_argument(std::string("PoseGrid: ") + axis +
                                    " axis must be strictly increasing");
    }
  };
  check(x_values, "x");
  check(y_values, "y");
  check(theta_values, "theta");
  for (double t : theta_values)
    if (t <= -180.0 || t > 180.0)
      throw std::invalid_argument("PoseGrid: theta values must lie in (-180, 180]");
}

Pose2D PoseGrid::pose_at(size_t index) const {
  size_t nt = theta_values.size(), ny = y_values.size();
  size_t it = index % nt;
  size_t iy = (index / nt) % ny;
  size_t ix = index / (nt * ny);
  return {x_values[ix], y_values[iy], theta_values[it]};
}

namespace {

// Nearest index on a sorted axis plus the acceptance margin (half the largest
// adjacent spacing; unbounded for singleton axes).
std::pair<size_t, double> nearest_on_axis(const std::vector<double>& vals, double v) {
  if (vals.size() == 1) return {0, std::numeric_limits<double>::infinity()};
  auto it = std::lower_bound(vals.begin(), vals.end(), v);
  size_t hi = static_cast<size_t>(it - vals.begin());
  size_t best = hi;
  if (hi == vals.size()) {
    best = hi - 1;
  } else if (hi > 0 && v - vals[hi - 1] <= vals[hi] - v) {
    best = hi - 1;
  }
  double max_gap = 0.0;
  for (size_t i = 1; i < vals.size(); ++i)
    max_gap = std::max(max_gap, vals[i] - vals[i - 1]);
  return {best, 0.5 * max_gap};
}

size_t nearest_theta(const std::vector<double>& vals, double theta, double* dist) {
  size_t best = 0;
  double bd = 1e30;
  for (size_t i = 0; i < vals.size(); ++i) {
    double d = std::abs(wrap_degrees(theta - vals[i]));
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  *dist = bd;
  return best;
}

}  // namespace

std::optional<size_t> PoseGrid::snap(const Pose2D& p) const {
  auto [ix, mx] = nearest_on_axis(x_values, p.x);
  if (std::abs(p.x - x_values[ix]) > mx + 1e-9) return std::nullopt;
  auto [iy, my] = nearest_on_axis(y_values, p.y);
  if (std::abs(p.y - y_values[iy]) > my + 1e-9) return std::nullopt;
  double dt = 0.0;
  size_t it = nearest_theta(theta_values, p.theta, &dt);
  if (theta_values.size() > 1) {
    double max_gap = 0.0;
    for (size_t i = 1; i < theta_values.size(); ++i)
      max_gap = std::max(max_gap, theta_values[i] - theta_values[i - 1]);
    if (dt > 0.5 * max_gap + 1e-9) return std::nullopt;
  }
  return index_of(ix, iy, it);
}

size_t PoseGrid::snap_clamped(const Pose2D& p) const {
  auto [ix, mx] = nearest_on_axis(x_values, p.x);
  auto [iy, my] = nearest_on_axis(y_values, p.y);
  (void)mx;
  (void)my;
  double dt = 0.0;
  size_t it = nearest_theta(theta_values, p.theta, &dt);
  return index_of(ix, iy, it);
}

PoseGrid make_pose_grid(GridKind kind) {
  PoseGrid g;
  if (kind == GridKind::kSmall) {
    g.x_values = {-8, -4, 0, 4, 8};
    g.y_values = {-8, -4, 0, 4, 8};
  } else {
    for (int v = -20; v <= 20; v += 4) {
      g.x_values.push_back(v);
      g.y_values.push_back(v);
    }
  }
  for (int t = -90; t <= 90; t += 30) g.theta_values.push_back(t);
  g.validate();
  return g;
}

PoseGrid make_pose_grid(std::vector<double> xs, std::vector<double> ys,
                        std::vector<double> thetas) {
  PoseGrid g{std::move(xs), std::move(ys), std::move(thetas)};
  g.validate();
  return g;
}

ContactPatch rasterize(const ShapeSpec& shape, const Pose2D& pose,
                       const SensorWindow& window) {
  shape.validate();
  window.validate();

  double rad = pose.theta * kDegToRad;
  double c = std::cos(rad), s = std::sin(rad);
  auto bbox = shape.bounding_box();

  std::vector<float> cells(static_cast<size_t>(window.rows) * window.cols);
  const double sub[2] = {0.25, 0.75};
  for (int r = 0; r < window.rows; ++r) {
    for (int col = 0; col < window.cols; ++col) {
      int hits = 0;
      for (double oy : sub) {
        double sy = (0.5 - (r + oy) / window.rows) * window.height_mm;
        for (double ox : sub) {
          double sx = ((col + ox) / window.cols - 0.5) * window.width_mm;
          double px = pose.x + c * sx - s * sy;
          double py = pose.y + s * sx + c * sy;
          if (px < bbox[0] || px > bbox[2] || py < bbox[1] || py > bbox[3]) continue;
          if (shape.contains(px, py)) ++hits;
        }
      }
      cells[static_cast<size_t>(r) * window.cols + col] = hits * 0.25f;
    }
  }
  return ContactPatch(window.rows, window.cols, std::move(cells));
}

ContactPatch hole_rasterize(const ShapeSpec& shape, const Pose2D& pose,
                            const SensorWindow& window,
                            std::optional<double> plate_margin_mm) {
  ContactPatch peg = rasterize(shape, pose, window);
  if (!plate_margin_mm.has_value()) {
    // Full-window plate: the hole image is the exact complement of the peg.
    return complement(peg);
  }
  if (*plate_margin_mm < 0.0)
    throw std::invalid_argument("hole_rasterize: negative plate margin");
  auto bbox = shape.bounding_box();
  ShapeSpec plate;
  plate.category_id = shape.category_id + "#plate";
  PolygonWithHoles rect;
  double m = *plate_margin_mm;
  rect.outer = {{bbox[0] - m, bbox[1] - m},
                {bbox[2] + m, bbox[1] - m},
                {bbox[2] + m, bbox[3] + m},
                {bbox[0] - m, bbox[3] + m}};
  plate.polygons.push_back(std::move(rect));
  ContactPatch plate_patch = rasterize(plate, pose, window);
  std::vector<float> cells(peg.cells().size());
  for (size_t i = 0; i < cells.size(); ++i)
    cells[i] = std::max(0.0f, plate_patch.cells()[i] - peg.cells()[i]);
  return ContactPatch(peg.rows(), peg.cols(), std::move(cells));
}

std::vector<ShapeSpec> generate_maze_board(uint64_t seed, const MazeParams& params) {
  if (params.walls <= 0 || params.cells_x < 2 || params.cells_y < 2 ||
      params.cell_mm <= 0.0 || params.wall_thickness_mm <= 0.0 ||
      params.perturb_mm < 0.0)
    throw std::invalid_argument("generate_maze_board: bad parameters");

  const int nx = params.cells_x, ny = params.cells_y;
  Rng g(mix64(seed ^ 0x6d617a65ull));  // "maze"

  // Randomized DFS spanning tree; walls remain on uncarved internal edges and
  // on the outer border.
  std::vector<uint8_t> visited(static_cast<size_t>(nx) * ny, 0);
  // carved_v[x][y]: passage between (x,y) and (x+1,y); carved_h: to (x,y+1).
  std::vector<uint8_t> carved_v(static_cast<size_t>(nx - 1) * ny, 0);
  std::vector<uint8_t> carved_h(static_cast<size_t>(nx) * (ny - 1), 0);
  std::vector<std::pair<int, int>> stack;
  stack.emplace_back(0, 0);
  visited[0] = 1;
  while (!stack.empty()) {
    auto [cx, cy] = stack.back();
    int dirs[4] = {0, 1, 2, 3};
    std::shuffle(dirs, dirs + 4, g);
    bool moved = false;
    for (int d : dirs) {
      int tx = cx + (d == 0) - (d == 1);
      int ty = cy + (d == 2) - (d == 3);
      if (tx < 0 || tx >= nx || ty < 0 || ty >= ny) continue;
      if (visited[static_cast<size_t>(ty) * nx + tx]) continue;
      if (d == 0) carved_v[static_cast<size_t>(cy) * (nx - 1) + cx] = 1;
      if (d == 1) carved_v[static_cast<size_t>(cy) * (nx - 1) + tx] = 1;
      if (d == 2) carved_h[static_cast<size_t>(cy) * nx + cx] = 1;
      if (d == 3) carved_h[static_cast<size_t>(ty) * nx + cx] = 1;
      visited[static_cast<size_t>(ty) * nx + tx] = 1;
      stack.emplace_back(tx, ty);
      moved = true;
      break;
    }
    if (!moved) stack.pop_back();
  }

  struct Wall {
    double cx, cy, len;
    bool vertical;
  };
  std::vector<Wall> walls;
  const double cell = params.cell_mm;
  const double x0 = -0.5 * nx * cell, y0 = -0.5 * ny * cell;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x + 1 < nx; ++x)
      if (!carved_v[static_cast<size_t>(y) * (nx - 1) + x])
        walls.push_back({x0 + (x + 1) * cell, y0 + (y + 0.5) * cell, cell, true});
  for (int y = 0; y + 1 < ny; ++y)
    for (int x = 0; x < nx; ++x)
      if (!carved_h[static_cast<size_t>(y) * nx + x])
        walls.push_back({x0 + (x + 0.5) * cell, y0 + (y + 1) * cell, cell, false});
  for (int x = 0; x < nx; ++x) {
    walls.push_back({x0 + (x + 0.5) * cell, y0, cell, false});
    walls.push_back({x0 + (x + 0.5) * cell, y0 + ny * cell, cell, false});
  }
  for (int y = 0; y < ny; ++y) {
    walls.push_back({x0, y0 + (y + 0.5) * cell, cell, true});
    walls.push_back({x0 + nx * cell, y0 + (y + 0.5) * cell, cell, true});
  }
  std::shuffle(walls.begin(), walls.end(), g);
  size_t count = std::min<size_t>(walls.size(), static_cast<size_t>(params.walls));

  std::vector<ShapeSpec> shapes;
  shapes.reserve(count);
  std::uniform_real_distribution<double> jitter(-params.perturb_mm, params.perturb_mm);
  for (size_t i = 0; i < count; ++i) {
    const Wall& w = walls[i];
    double cx = w.cx + jitter(g), cy = w.cy + jitter(g);
    double len = std::max(cell * 0.4, w.len + jitter(g));
    double thick = std::max(0.6, params.wall_thickness_mm + 0.5 * jitter(g));
    double ang = (params.perturb_mm > 0.0 ? jitter(g) * 4.0 : 0.0) * kDegToRad;
    double hx = 0.5 * (w.vertical ? thick : len);
    double hy = 0.5 * (w.vertical ? len : thick);
    double ca = std::cos(ang), sa = std::sin(ang);
    PolygonWithHoles rect;
    for (auto [ux, uy] : {std::pair{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}})
      rect.outer.push_back({cx + ca * ux - sa * uy, cy + sa * ux + ca * uy});
    ShapeSpec s;
    s.category_id = "maze" + std::to_string(seed) + "_w" + std::to_string(i);
    s.polygons.push_back(std::move(rect));
    s.validate();
    shapes.push_back(std::move(s));
  }
  return shapes;
}

namespace {

nlohmann::json ring_to_json(const std::vector<Vec2>& ring) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Vec2& v : ring) arr.push_back({v.x, v.y});
  return arr;
}

std::vector<Vec2> ring_from_json(const nlohmann::json& arr) {
  std::vector<Vec2> ring;
  for (const auto& p : arr) ring.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return ring;
}

}  // namespace

void write_shape_json(const std::string& path, const ShapeSpec& shape) {
  shape.validate();
  nlohmann::json j;
  j["category_id"] = shape.category_id;
  if (!shape.polygons.empty()) {
    nlohmann::json polys = nlohmann::json::array();
    for (const auto& poly : shape.polygons) {
      nlohmann::json p;
      p["outer"] = ring_to_json(poly.outer);
      if (!poly.holes.empty()) {
        nlohmann::json hs = nlohmann::json::array();
        for (const auto& h : poly.holes) hs.push_back(ring_to_json(h));
        p["holes"] = hs;
      }
      polys.push_back(std::move(p));
    }
    j["polygons"] = std::move(polys);
  }
  if (shape.raster.has_value()) {
    const ShapeRaster& r = *shape.raster;
    std::vector<uint8_t> packed((r.mask.size() + 7) / 8, 0);
    for (size_t i = 0; i < r.mask.size(); ++i)
      if (r.mask[i]) packed[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
    j["raster"] = {{"pitch_mm", r.pitch_mm},
                   {"rows", r.rows},
                   {"cols", r.cols},
                   {"data", base64_encode(packed)}};
  }
  auto bbox = shape.bounding_box();
  j["bbox_mm"] = {bbox[2] - bbox[0], bbox[3] - bbox[1]};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << j.dump(2) << "\n";
}

ShapeSpec read_shape_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed shape JSON in " + path + ": " + e.what());
  }
  ShapeSpec shape;
  shape.category_id = j.at("category_id").get<std::string>();
  if (j.contains("polygons")) {
    for (const auto& p : j["polygons"]) {
      PolygonWithHoles poly;
      poly.outer = ring_from_json(p.at("outer"));
      if (p.contains("holes"))
        for (const auto& h : p["holes"]) poly.holes.push_back(ring_from_json(h));
      shape.polygons.push_back(std::move(poly));
    }
  }
  if (j.contains("raster")) {
    const auto& rj = j["raster"];
    ShapeRaster r;
    r.pitch_mm = rj.at("pitch_mm").get<double>();
    r.rows = rj.at("rows").get<int>();
    r.cols = rj.at("cols").get<int>();
    std::vector<uint8_t> packed = base64_decode(rj.at("data").get<std::string>());
    size_t n = static_cast<size_t>(r.rows) * r.cols;
    if (packed.size() < (n + 7) / 8)
      throw std::runtime_error("raster bitmask too short in " + path);
    r.mask.resize(n);
    for (size_t i = 0; i < n; ++i)
      r.mask[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
    shape.raster = std::move(r);
  }
  shape.validate();
  return shape;
}

}  // namespace tactile
