#include "tactile/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tactile {

GeometricOracle::GeometricOracle(double epsilon, double sharpness)
    : epsilon_(epsilon), sharpness_(sharpness), int_exponent_(0) {
  if (!(epsilon_ > 0.0) || epsilon_ > 0.01)
    throw std::invalid_argument("GeometricOracle: epsilon must be in (0, 0.01]");
  if (!(sharpness_ > 0.0))
    throw std::invalid_argument("GeometricOracle: sharpness must be positive");
  if (sharpness_ <= 64.0 && std::floor(sharpness_) == sharpness_)
    int_exponent_ = static_cast<int>(sharpness_);
}

double GeometricOracle::sharpen(double agreement) const {
  double s;
  if (int_exponent_ > 0) {
    s = 1.0;
    double base = agreement;
    for (int e = int_exponent_; e > 0; e >>= 1) {
      if (e & 1) s *= base;
      base *= base;
    }
  } else {
    s = std::pow(agreement, sharpness_);
  }
  return std::max(epsilon_, s);
}

double GeometricOracle::score_hp(const ContactPatch& hole,
                                 const ContactPatch& peg) const {
  if (!hole.same_shape(peg))
    throw std::invalid_argument("score_hp: dimension mismatch");
  double d;
  if (hole.quantized() && peg.quantized()) {
    d = 0.25 * detail::abs_diff_sum(hole.levels().data(),
                                    peg.complement_levels().data(),
                                    hole.levels().size());
  } else {
    const auto& h = hole.cells();
    const auto& p = peg.cells();
    double acc = 0.0;
    for (size_t i = 0; i < h.size(); ++i)
      acc += std::abs(static_cast<double>(h[i]) - (1.0 - static_cast<double>(p[i])));
    d = acc;
  }
  return sharpen(1.0 - d / hole.cell_count());
}

double GeometricOracle::score_pp(const ContactPatch& a, const ContactPatch& b) const {
  double d = l1_distance(a, b);
  return sharpen(1.0 - d / a.cell_count());
}

namespace {

double unit_dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("embedding dimension mismatch");
  auto check_norm = [](std::span<const float> v) {
    double n = 0.0;
    for (float x : v) n += static_cast<double>(x) * x;
    if (std::abs(std::sqrt(n) - 1.0) > 1e-5)
      throw std::invalid_argument("embedding vector is not unit-norm");
  };
  check_norm(a);
  check_norm(b);
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return dot;
}

}  // namespace

double embed_score(std::span<const float> q, std::span<const float> k, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("embed_score: tau must be positive");
  return std::exp((unit_dot(q, k) - 1.0) / tau);
}

double info_nce_loss(std::span<const float> q, std::span<const float> k_pos,
                     const std::vector<std::vector<float>>& k_neg, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("info_nce_loss: tau must be positive");
  if (k_neg.empty())
    throw std::invalid_argument("info_nce_loss: needs at least one negative");
  double lpos = unit_dot(q, k_pos) / tau;
  std::vector<double> logits{lpos};
  for (const auto& k : k_neg) logits.push_back(unit_dot(q, k) / tau);
  double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  return (std::log(sum) + m) - lpos;  // logsumexp(all) - positive logit
}

void EmbeddingTable::validate(std::optional<size_t> bank_entries) const {
  if (dimension <= 0) throw std::invalid_argument("EmbeddingTable: bad dimension");
  if (!(tau > 0.0)) throw std::invalid_argument("EmbeddingTable: tau must be positive");
  for (const auto& v : vectors) {
    if (v.size() != static_cast<size_t>(dimension))
      throw std::invalid_argument("EmbeddingTable: vector dimension mismatch");
    double n = 0.0;
    for (float x : v) {
      if (!std::isfinite(x)) throw std::invalid_argument("EmbeddingTable: non-finite value");
      n += static_cast<double>(x) * x;
    }
    if (std::abs(std::sqrt(n) - 1.0) > 1e-5)
      throw std::invalid_argument("EmbeddingTable: vector is not unit-norm");
  }
  if (bank_entries.has_value() && vectors.size() != *bank_entries)
    throw std::invalid_argument("EmbeddingTable: entry count does not match the bank");
}

void save_embedding_table(const std::string& path, const EmbeddingTable& table) {
  table.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  nlohmann::json header = {{"dimension", table.dimension},
                           {"tau", table.tau},
                           {"count", table.vectors.size()}};
  out << header.dump() << "\n";
  for (const auto& v : table.vectors)
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

EmbeddingTable load_embedding_table(const std::string& path,
                                    std::optional<size_t> bank_entries) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("embedding table missing header: " + path);
  EmbeddingTable table;
  size_t count = 0;
  try {
    nlohmann::json header = nlohmann::json::parse(header_line);
    table.dimension = header.at("dimension").get<int>();
    table.tau = header.at("tau").get<double>();
    count = header.at("count").get<size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed embedding table header in " + path + ": " +
                             e.what());
  }
  if (table.dimension <= 0 || count > (1u << 24))
    throw std::runtime_error("implausible embedding table header in " + path);
  table.vectors.assign(count, std::vector<float>(static_cast<size_t>(table.dimension)));
  for (auto& v : table.vectors) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated embedding table: " + path);
  }
  table.validate(bank_entries);
  return table;
}

}  // namespace tactile
