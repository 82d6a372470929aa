#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tactile {

// Rasterized tactile intensity grid, row-major with row 0 at the top of the
// sensor window. Cells are finite values in [0, 1]; 0 means no material under
// the pixel. Noise-free rasters hold exact multiples of 1/4 (2x2
// supersampling) and per-cell flips preserve that, which enables an integer
// fast path for L1 sums; blurred patches fall back to the float path.
class ContactPatch {
 public:
  ContactPatch() = default;
  ContactPatch(int rows, int cols, std::vector<float> cells);

  static ContactPatch zeros(int rows, int cols);
  static ContactPatch ones(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int cell_count() const { return rows_ * cols_; }
  float at(int r, int c) const { return cells_[static_cast<size_t>(r) * cols_ + c]; }
  const std::vector<float>& cells() const { return cells_; }
  double mass() const { return mass_; }  // sum of all cells

  bool quantized() const { return !levels_.empty(); }
  // Per-cell 4*v and 4 - 4*v, present only when quantized().
  const std::vector<uint8_t>& levels() const { return levels_; }
  const std::vector<uint8_t>& complement_levels() const { return clevels_; }

  bool same_shape(const ContactPatch& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  bool operator==(const ContactPatch& o) const;

  uint64_t digest() const;   // content fingerprint (dims + raw cells)
  std::string ascii() const; // coarse sketch, debugging aid

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<float> cells_;
  std::vector<uint8_t> levels_, clevels_;
  double mass_ = 0.0;
};

// Sum of |a - b| over all cells, accumulated in double. Throws on dimension
// mismatch. Quantized pairs take an integer abs-diff path that returns the
// exact same value as the float path.
double l1_distance(const ContactPatch& a, const ContactPatch& b);

// Plain float-path summation, kept as the reference for the integer path.
double l1_distance_reference(const ContactPatch& a, const ContactPatch& b);

// True iff the patch differs from the no-contact image by more than delta_act
// in L1, i.e. l1_distance(p, zeros) > delta_act (strict).
bool has_contact(const ContactPatch& p, double delta_act);

ContactPatch complement(const ContactPatch& p);  // cellwise 1 - v

namespace detail {
// Sum of |a[i] - b[i]| over n bytes (SSE2 psadbw when available).
uint32_t abs_diff_sum(const uint8_t* a, const uint8_t* b, size_t n);
}

// Flat binary container: magic "TFPATCH1", u32 rows, u32 cols, then rows*cols
// f32 cells row-major, all little-endian.
void write_patch(const std::string& path, const ContactPatch& p);
ContactPatch read_patch(const std::string& path);

}  // namespace tactile
