#include "celp/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace celp {

namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor file i/o assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'E', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

void read_exact(std::ifstream& in, void* dst, std::size_t bytes, std::size_t offset,
                const std::string& what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw FormatError("tensor file: truncated " + what + " at byte offset " +
                      std::to_string(offset) + ": expected " + std::to_string(bytes) +
                      " bytes, got " + std::to_string(in.gcount()));
  }
}

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::u8: return 1;
  }
  return 0;
}

}  // namespace

std::size_t TensorFile::element_count() const {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("tensor file: cannot open " + path);

  char magic[4];
  read_exact(in, magic, 4, 0, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("tensor file: bad magic at byte offset 0 in " + path);
  }
  std::uint32_t version = 0;
  read_exact(in, &version, 4, 4, "version");
  if (version != kVersion) {
    throw FormatError("tensor file: unsupported version " + std::to_string(version) +
                      " at byte offset 4");
  }
  std::uint8_t dtype_byte = 0, ndim = 0;
  read_exact(in, &dtype_byte, 1, 8, "dtype");
  if (dtype_byte > 2) {
    throw FormatError("tensor file: unsupported dtype " + std::to_string(dtype_byte) +
                      " at byte offset 8");
  }
  read_exact(in, &ndim, 1, 9, "ndim");
  if (ndim == 0) throw FormatError("tensor file: zero-rank tensor at byte offset 9");

  TensorFile file;
  file.dtype = static_cast<Dtype>(dtype_byte);
  file.shape.resize(ndim);
  std::size_t offset = 10;
  for (std::size_t i = 0; i < ndim; ++i) {
    std::uint64_t extent = 0;
    read_exact(in, &extent, 8, offset, "extent");
    if (extent == 0) {
      throw FormatError("tensor file: zero extent at byte offset " + std::to_string(offset));
    }
    file.shape[i] = static_cast<std::size_t>(extent);
    offset += 8;
  }

  const std::size_t count = file.element_count();
  const std::size_t payload = count * dtype_size(file.dtype);
  std::vector<char> buf(payload);
  read_exact(in, buf.data(), payload, offset, "payload");

  switch (file.dtype) {
    case Dtype::f32: {
      file.numeric.resize(count);
      const float* src = reinterpret_cast<const float*>(buf.data());
      for (std::size_t i = 0; i < count; ++i) file.numeric[i] = src[i];
      break;
    }
    case Dtype::f64: {
      file.numeric.resize(count);
      std::memcpy(file.numeric.data(), buf.data(), payload);
      break;
    }
    case Dtype::u8: {
      file.bytes.assign(buf.begin(), buf.end());
      break;
    }
  }
  return file;
}

namespace {

void write_header(std::ofstream& out, Dtype dtype, const std::vector<std::size_t>& shape) {
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const auto dtype_byte = static_cast<std::uint8_t>(dtype);
  const auto ndim = static_cast<std::uint8_t>(shape.size());
  out.write(reinterpret_cast<const char*>(&dtype_byte), 1);
  out.write(reinterpret_cast<const char*>(&ndim), 1);
  for (std::size_t e : shape) {
    const std::uint64_t extent = e;
    out.write(reinterpret_cast<const char*>(&extent), 8);
  }
}

}  // namespace

void write_tensor_file(const std::string& path, const Tensor& t, Dtype dtype) {
  if (dtype == Dtype::u8) {
    throw FormatError("tensor file: real tensors use dtype f32 or f64");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("tensor file: cannot write " + path);
  write_header(out, dtype, t.shape());
  if (dtype == Dtype::f64) {
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * 8));
  } else {
    std::vector<float> narrow(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      narrow[i] = static_cast<float>(t.get(i));
    }
    out.write(reinterpret_cast<const char*>(narrow.data()),
              static_cast<std::streamsize>(narrow.size() * 4));
  }
  if (!out) throw FormatError("tensor file: short write to " + path);
}

void write_mask_file(const std::string& path, const LabelMask& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("tensor file: cannot write " + path);
  write_header(out, Dtype::u8, {m.height, m.width});
  out.write(reinterpret_cast<const char*>(m.labels.data()),
            static_cast<std::streamsize>(m.labels.size()));
  if (!out) throw FormatError("tensor file: short write to " + path);
}

Tensor to_tensor(const TensorFile& f) {
  if (f.dtype == Dtype::u8) {
    throw FormatError("tensor file: expected a real-valued tensor, found dtype u8");
  }
  return Tensor(f.shape, f.numeric);
}

LabelMask to_mask(const TensorFile& f) {
  if (f.dtype != Dtype::u8) {
    throw FormatError("tensor file: expected a u8 mask");
  }
  if (f.shape.size() != 2) {
    throw FormatError("tensor file: masks are 2-d, found rank " +
                      std::to_string(f.shape.size()));
  }
  for (std::uint8_t v : f.bytes) {
    if (!valid_label(v)) {
      throw FormatError("tensor file: mask value " + std::to_string(v) +
                        " not in {0,1,255}");
    }
  }
  return LabelMask(f.shape[0], f.shape[1], f.bytes);
}

}  // namespace celp
