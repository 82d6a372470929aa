#include "tactile/bank.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "tactile/kernels.hpp"
#include "tactile/sensing.hpp"

namespace fs = std::filesystem;

namespace tactile {

void PegImageBank::validate() const {
  if (categories.empty()) throw std::invalid_argument("PegImageBank: no categories");
  grid.validate();
  window.validate();
  if (patches.size() != categories.size() * grid.size())
    throw std::invalid_argument("PegImageBank: entry count mismatch");
  for (const ContactPatch& p : patches)
    if (p.rows() != window.rows || p.cols() != window.cols)
      throw std::invalid_argument("PegImageBank: mixed patch resolutions");
}

PegImageBank build_bank(const std::vector<ShapeSpec>& shapes, const PoseGrid& grid,
                        const SensorWindow& window, bool parallel) {
  if (shapes.empty()) throw std::invalid_argument("build_bank: no shapes");
  grid.validate();
  window.validate();
  PegImageBank bank;
  for (const ShapeSpec& s : shapes) bank.categories.push_back(s.category_id);
  bank.grid = grid;
  bank.window = window;
  bank.delta_act = default_delta_act(window);
  bank.patches = kernels::rasterize_entries(shapes, grid, window, parallel);
  bank.no_contact = no_contact_image(window);
  bank.validate();
  return bank;
}

PegImageBank subset_bank(const PegImageBank& bank, size_t n_categories) {
  if (n_categories == 0 || n_categories > bank.categories.size())
    throw std::invalid_argument("subset_bank: bad category count");
  PegImageBank out;
  out.categories.assign(bank.categories.begin(),
                        bank.categories.begin() + static_cast<long>(n_categories));
  out.grid = bank.grid;
  out.window = bank.window;
  out.delta_act = bank.delta_act;
  out.patches.assign(bank.patches.begin(),
                     bank.patches.begin() +
                         static_cast<long>(n_categories * bank.grid.size()));
  out.no_contact = bank.no_contact;
  out.validate();
  return out;
}

void save_bank(const std::string& dir, const PegImageBank& bank,
               const std::vector<ShapeSpec>& shapes) {
  bank.validate();
  if (shapes.size() != bank.categories.size())
    throw std::invalid_argument("save_bank: shape list does not match categories");
  fs::create_directories(fs::path(dir) / "shapes");

  nlohmann::json m;
  m["format"] = "tactile-bank-v1";
  m["categories"] = bank.categories;
  m["grid"] = {{"x", bank.grid.x_values},
               {"y", bank.grid.y_values},
               {"theta", bank.grid.theta_values}};
  m["window"] = {{"width_mm", bank.window.width_mm},
                 {"height_mm", bank.window.height_mm},
                 {"cols", bank.window.cols},
                 {"rows", bank.window.rows}};
  m["delta_act"] = bank.delta_act;
  m["entries"] = bank.entry_count();
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write bank manifest in " + dir);
  out << m.dump(2) << "\n";

  char name[32];
  for (size_t i = 0; i < bank.entry_count(); ++i) {
    std::snprintf(name, sizeof(name), "entry_%06zu", i);
    write_patch((fs::path(dir) / (std::string(name) + ".tfp")).string(), bank.entry(i));
    write_patch_sidecar((fs::path(dir) / (std::string(name) + ".json")).string(),
                        bank.categories[bank.category_of(i)],
                        bank.grid.pose_at(bank.pose_index_of(i)), static_cast<int>(i));
  }
  for (size_t c = 0; c < shapes.size(); ++c)
    write_shape_json((fs::path(dir) / "shapes" / (bank.categories[c] + ".json")).string(),
                     shapes[c]);
}

LoadedBank load_bank(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("missing bank manifest in " + dir);
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed bank manifest in " + dir + ": " + e.what());
  }
  if (m.value("format", "") != "tactile-bank-v1")
    throw std::runtime_error("unsupported bank format in " + dir);

  LoadedBank loaded;
  PegImageBank& bank = loaded.bank;
  bank.categories = m.at("categories").get<std::vector<std::string>>();
  bank.grid.x_values = m.at("grid").at("x").get<std::vector<double>>();
  bank.grid.y_values = m.at("grid").at("y").get<std::vector<double>>();
  bank.grid.theta_values = m.at("grid").at("theta").get<std::vector<double>>();
  bank.window.width_mm = m.at("window").at("width_mm").get<double>();
  bank.window.height_mm = m.at("window").at("height_mm").get<double>();
  bank.window.cols = m.at("window").at("cols").get<int>();
  bank.window.rows = m.at("window").at("rows").get<int>();
  bank.delta_act = m.at("delta_act").get<double>();

  size_t entries = m.at("entries").get<size_t>();
  if (entries != bank.categories.size() * bank.grid.size())
    throw std::runtime_error("bank manifest entry count mismatch in " + dir);
  bank.patches.reserve(entries);
  char name[32];
  for (size_t i = 0; i < entries; ++i) {
    std::snprintf(name, sizeof(name), "entry_%06zu.tfp", i);
    bank.patches.push_back(read_patch((fs::path(dir) / name).string()));
  }
  bank.no_contact = no_contact_image(bank.window);
  bank.validate();

  for (const std::string& cat : bank.categories) {
    fs::path p = fs::path(dir) / "shapes" / (cat + ".json");
    if (!fs::exists(p))
      throw std::runtime_error("bank is missing shape file for category " + cat);
    loaded.shapes.push_back(read_shape_json(p.string()));
  }
  return loaded;
}

}  // namespace tactile
