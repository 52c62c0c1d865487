#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "celp/errors.hpp"

namespace celp {

// Global storage precision. Arithmetic always accumulates in double; in f32
// mode every value stored into a Tensor is rounded through float first.
// Verification and gradient-check paths run in f64.
enum class Precision { f32, f64 };

void set_precision(Precision p);
Precision precision();

inline double quantize(double v, Precision p) {
  return p == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}
double quantize(double v);

// Dense row-major real tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double get(std::size_t i) const { return data_[i]; }
  void set(std::size_t i, double v) { data_[i] = quantize(v); }

  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  // Throws if any element is NaN or infinite; `context` names the producer.
  void check_finite(const char* context) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// C x h x w activation grid. Position index p runs row-major over the
// spatial grid: p = y * width + x, p in [0, height*width). All modules share
// this convention.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor values;  // shape {channels, height, width}

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t h, std::size_t w);
  FeatureMap(std::size_t c, std::size_t h, std::size_t w, Tensor t);

  std::size_t positions() const { return height * width; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values.get((c * height + y) * width + x);
  }
  void set(std::size_t c, std::size_t y, std::size_t x, double v) {
    values.set((c * height + y) * width + x, v);
  }
  // Channel c of the feature vector at spatial position p.
  double at_pos(std::size_t c, std::size_t p) const {
    return values.get(c * positions() + p);
  }
  void set_pos(std::size_t c, std::size_t p, double v) {
    values.set(c * positions() + p, v);
  }
};

// Symmetric n x n cosine table over feature positions, n = h*w.
struct SimilarityMatrix {
  std::size_t n = 0;
  Tensor values;  // shape {n, n}

  double at(std::size_t i, std::size_t j) const { return values.get(i * n + j); }
};

// Per-channel class representation from masked pooling.
struct Prototype {
  Tensor values;  // shape {channels}

  std::size_t channels() const { return values.size(); }
  double at(std::size_t c) const { return values.get(c); }
};

}  // namespace celp
