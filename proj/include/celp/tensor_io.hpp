#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "celp/mask.hpp"
#include "celp/tensor.hpp"

namespace celp {

// Binary tensor file, bit-exact and little-endian throughout:
//   bytes 0-3   magic "CELP"
//   bytes 4-7   u32 version = 1
//   byte  8     u8 dtype: 0 = f32, 1 = f64, 2 = u8
//   byte  9     u8 ndim
//   then        ndim x u64 extents
//   then        row-major payload
// Masks are stored as dtype u8.

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, u8 = 2 };

struct TensorFile {
  Dtype dtype = Dtype::f64;
  std::vector<std::size_t> shape;
  std::vector<double> numeric;     // filled for f32/f64
  std::vector<std::uint8_t> bytes; // filled for u8

  std::size_t element_count() const;
};

TensorFile read_tensor_file(const std::string& path);

void write_tensor_file(const std::string& path, const Tensor& t, Dtype dtype);
void write_mask_file(const std::string& path, const LabelMask& m);

// Conversions with shape checks; FormatError on mismatch.
Tensor to_tensor(const TensorFile& f);
LabelMask to_mask(const TensorFile& f);

}  // namespace celp
