#include "tactile/patch.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tactile/digest.hpp"

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace tactile {

static_assert(std::endian::native == std::endian::little,
              "patch container I/O assumes a little-endian host");

ContactPatch::ContactPatch(int rows, int cols, std::vector<float> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  if (rows_ <= 0 || cols_ <= 0)
    throw std::invalid_argument("ContactPatch: non-positive dimensions");
  if (cells_.size() != static_cast<size_t>(rows_) * cols_)
    throw std::invalid_argument("ContactPatch: cell count does not match dimensions");

  bool quant = true;
  double mass = 0.0;
  for (float v : cells_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
      throw std::invalid_argument("ContactPatch: cells must be finite and in [0, 1]");
    mass += v;
    if (quant) {
      float q = v * 4.0f;
      float r = std::nearbyintf(q);
      if (r != q) quant = false;
    }
  }
  mass_ = mass;
  if (quant) {
    levels_.resize(cells_.size());
    clevels_.resize(cells_.size());
    for (size_t i = 0; i < cells_.size(); ++i) {
      auto q = static_cast<uint8_t>(cells_[i] * 4.0f);
      levels_[i] = q;
      clevels_[i] = static_cast<uint8_t>(4 - q);
    }
  }
}

ContactPatch ContactPatch::zeros(int rows, int cols) {
  return ContactPatch(rows, cols,
                      std::vector<float>(static_cast<size_t>(rows) * cols, 0.0f));
}

ContactPatch ContactPatch::ones(int rows, int cols) {
  return ContactPatch(rows, cols,
                      std::vector<float>(static_cast<size_t>(rows) * cols, 1.0f));
}

bool ContactPatch::operator==(const ContactPatch& o) const {
  return same_shape(o) &&
         std::memcmp(cells_.data(), o.cells_.data(), cells_.size() * sizeof(float)) == 0;
}

uint64_t ContactPatch::digest() const {
  uint64_t h = fnv1a64(&rows_, sizeof(rows_));
  h = fnv1a64(&cols_, sizeof(cols_), h);
  return fnv1a64(cells_.data(), cells_.size() * sizeof(float), h);
}

std::string ContactPatch::ascii() const {
  static const char shade[] = " .:oO@";
  std::string out;
  out.reserve(static_cast<size_t>(rows_) * (cols_ + 1));
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      float v = at(r, c);
      out.push_back(shade[static_cast<int>(v * 4.0f + 0.5f) + (v > 0.f && v < 0.25f ? 1 : 0)]);
    }
    out.push_back('\n');
  }
  return out;
}

namespace detail {

uint32_t abs_diff_sum(const uint8_t* a, const uint8_t* b, size_t n) {
#if defined(__SSE2__)
  __m128i acc = _mm_setzero_si128();
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    __m128i va = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + i));
    __m128i vb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + i));
    acc = _mm_add_epi64(acc, _mm_sad_epu8(va, vb));
  }
  uint64_t lanes[2];
  _mm_storeu_si128(reinterpret_cast<__m128i*>(lanes), acc);
  auto total = static_cast<uint32_t>(lanes[0] + lanes[1]);
  for (; i < n; ++i)
    total += static_cast<uint32_t>(a[i] > b[i] ? a[i] - b[i] : b[i] - a[i]);
  return total;
#else
  uint32_t total = 0;
  for (size_t i = 0; i < n; ++i)
    total += static_cast<uint32_t>(a[i] > b[i] ? a[i] - b[i] : b[i] - a[i]);
  return total;
#endif
}

}  // namespace detail

double l1_distance(const ContactPatch& a, const ContactPatch& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("l1_distance: dimension mismatch");
  if (a.quantized() && b.quantized()) {
    uint32_t q = detail::abs_diff_sum(a.levels().data(), b.levels().data(),
                                      a.levels().size());
    return static_cast<double>(q) * 0.25;
  }
  return l1_distance_reference(a, b);
}

double l1_distance_reference(const ContactPatch& a, const ContactPatch& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("l1_distance: dimension mismatch");
  const auto& va = a.cells();
  const auto& vb = b.cells();
  double acc = 0.0;
  for (size_t i = 0; i < va.size(); ++i)
    acc += std::abs(static_cast<double>(va[i]) - static_cast<double>(vb[i]));
  return acc;
}

bool has_contact(const ContactPatch& p, double delta_act) {
  if (delta_act <= 0.0)
    throw std::invalid_argument("has_contact: delta_act must be positive");
  // mass() equals l1_distance(p, zeros) exactly: same values, same order.
  return p.mass() > delta_act;
}

ContactPatch complement(const ContactPatch& p) {
  std::vector<float> out(p.cells().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0f - p.cells()[i];
  return ContactPatch(p.rows(), p.cols(), std::move(out));
}

void write_patch(const std::string& path, const ContactPatch& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write("TFPATCH1", 8);
  uint32_t rows = static_cast<uint32_t>(p.rows());
  uint32_t cols = static_cast<uint32_t>(p.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(p.cells().data()),
            static_cast<std::streamsize>(p.cells().size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

ContactPatch read_patch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "TFPATCH1", 8) != 0)
    throw std::runtime_error("bad patch magic in " + path);
  uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || rows == 0 || cols == 0 || rows > 1u << 16 || cols > 1u << 16)
    throw std::runtime_error("bad patch dimensions in " + path);
  std::vector<float> cells(static_cast<size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(cells.data()),
          static_cast<std::streamsize>(cells.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated patch file: " + path);
  return ContactPatch(static_cast<int>(rows), static_cast<int>(cols), std::move(cells));
}

}  // namespace tactile
