#include <map>
#include <stdexcept>

#include "tactile/geometry.hpp"

namespace tactile {

namespace {

struct GlyphDef {
  std::vector<std::vector<Vec2>> outers;
  std::vector<std::pair<int, std::vector<Vec2>>> holes;  // (outer index, ring)
};

// Letterforms on a 10 x 8 design box, origin bottom-left, stroke ~2.2 units.
// Deliberately free of 180-degree rotational symmetry (offset crossbars,
// unequal arms) so a rotated pose never produces the same print series.
const std::map<std::string, GlyphDef>& glyph_table() {
  static const std::map<std::string, GlyphDef> table = {
      {"A",
       {{{{0, 0}, {2.4, 0}, {3.2, 2.2}, {6.8, 2.2}, {7.6, 0}, {10, 0}, {6.4, 8}, {3.6, 8}}},
        {{0, {{4.1, 3.8}, {5.9, 3.8}, {5.35, 5.6}, {4.65, 5.6}}}}}},
      {"B",
       {{{{0, 0}, {7.2, 0}, {9.4, 1.1}, {9.4, 3.1}, {7.2, 4.1}, {8.8, 4.9}, {8.8, 6.9}, {6.8, 8}, {0, 8}}},
        {{0, {{2.2, 1.8}, {6.8, 1.8}, {6.8, 3.2}, {2.2, 3.2}}},
         {0, {{2.2, 4.9}, {6.4, 4.9}, {6.4, 6.2}, {2.2, 6.2}}}}}},
      {"C",
       {{{{10, 0}, {10, 2.2}, {2.2, 2.2}, {2.2, 5.8}, {10, 5.8}, {10, 8}, {0, 8}, {0, 0}}}, {}}},
      {"D",
       {{{{0, 0}, {5.8, 0}, {9.6, 1.8}, {9.6, 6.2}, {5.8, 8}, {0, 8}}},
        {{0, {{2.2, 2.1}, {5.4, 2.1}, {7.4, 3.2}, {7.4, 4.8}, {5.4, 5.9}, {2.2, 5.9}}}}}},
      {"E",
       {{{{0, 0}, {10, 0}, {10, 2}, {2.2, 2}, {2.2, 3.4}, {7.2, 3.4}, {7.2, 5}, {2.2, 5}, {2.2, 6.2}, {8.6, 6.2}, {8.6, 8}, {0, 8}}},
        {}}},
      {"F",
       {{{{0, 0}, {2.2, 0}, {2.2, 3.4}, {7.2, 3.4}, {7.2, 5}, {2.2, 5}, {2.2, 6.2}, {9.3, 6.2}, {9.3, 8}, {0, 8}}},
        {}}},
      {"G",
       {{{{0, 0}, {9.7, 0}, {9.7, 4.2}, {5.4, 4.2}, {5.4, 2.3}, {2.3, 2.3}, {2.3, 5.7}, {9.7, 5.7}, {9.7, 8}, {0, 8}}},
        {}}},
      {"H",
       {{{{0, 0}, {2.2, 0}, {2.2, 3.6}, {7.8, 3.6}, {7.8, 0}, {10, 0}, {10, 8}, {7.8, 8}, {7.8, 5.4}, {2.2, 5.4}, {2.2, 8}, {0, 8}}},
        {}}},
      {"I",
       {{{{1.2, 0}, {8.8, 0}, {8.8, 1.9}, {6.1, 1.9}, {6.1, 6.1}, {7.7, 6.1}, {7.7, 8}, {2.3, 8}, {2.3, 6.1}, {3.9, 6.1}, {3.9, 1.9}, {1.2, 1.9}}},
        {}}},
      {"J",
       {{{{1, 0}, {8.2, 0}, {8.2, 8}, {3.4, 8}, {3.4, 6.1}, {6, 6.1}, {6, 2}, {3.2, 2}, {3.2, 3.6}, {1, 3.6}}},
        {}}},
      {"K",
       {{{{0, 0}, {2.2, 0}, {2.2, 3.2}, {6.6, 0}, {9.6, 0}, {4.3, 4.0}, {9.9, 8}, {7.1, 8}, {2.2, 5.3}, {2.2, 8}, {0, 8}}},
        {}}},
      {"L",
       {{{{0, 0}, {9.6, 0}, {9.6, 2.1}, {2.2, 2.1}, {2.2, 8}, {0, 8}}}, {}}},
      {"M",
       {{{{0, 0}, {2.1, 0}, {2.1, 4.9}, {5, 1.3}, {7.9, 4.9}, {7.9, 0}, {10, 0}, {10, 8}, {7.6, 8}, {5, 4.6}, {2.4, 8}, {0, 8}}},
        {}}},
      {"T",
       {{{{0, 8}, {10, 8}, {10, 6}, {6.1, 6}, {6.1, 0}, {3.9, 0}, {3.9, 6}, {0, 6}}}, {}}},
  };
  return table;
}

}  // namespace

std::vector<std::string> glyph_names() {
  std::vector<std::string> names;
  for (const auto& [name, def] : glyph_table()) names.push_back(name);
  return names;
}

std::vector<ShapeSpec> glyph_library(const std::vector<std::string>& names,
                                     const GlyphScale& scale) {
  if (!(scale.width_mm > 0.0) || !(scale.height_mm > 0.0))
    throw std::invalid_argument("glyph_library: scale must be positive");
  const auto& table = glyph_table();
  double sx = scale.width_mm / 10.0, sy = scale.height_mm / 8.0;

  std::vector<ShapeSpec> shapes;
  shapes.reserve(names.size());
  for (const std::string& name : names) {
    auto it = table.find(name);
    if (it == table.end())
      throw std::invalid_argument("glyph_library: unknown glyph \"" + name + "\"");
    const GlyphDef& def = it->second;
    ShapeSpec shape;
    shape.category_id = name;
    auto map_ring = [&](const std::vector<Vec2>& ring) {
      std::vector<Vec2> out;
      out.reserve(ring.size());
      for (const Vec2& v : ring) out.push_back({(v.x - 5.0) * sx, (v.y - 4.0) * sy});
      return out;
    };
    for (const auto& outer : def.outers) {
      PolygonWithHoles poly;
      poly.outer = map_ring(outer);
      shape.polygons.push_back(std::move(poly));
    }
    for (const auto& [idx, ring] : def.holes)
      shape.polygons[static_cast<size_t>(idx)].holes.push_back(map_ring(ring));
    shape.validate();
    shapes.push_back(std::move(shape));
  }
  return shapes;
}

}  // namespace tactile
