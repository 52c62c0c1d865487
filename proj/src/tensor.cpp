#include "celp/tensor.hpp"

#include <cmath>
#include <string>

namespace celp {

namespace {
Precision g_precision = Precision::f64;
}  // namespace

void set_precision(Precision p) { g_precision = p; }
Precision precision() { return g_precision; }
double quantize(double v) { return quantize(v, g_precision); }

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extent must be positive");
    n *= e;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape product " +
                         std::to_string(shape_product(shape_)));
  }
  for (double& v : data_) v = quantize(v);
}

void Tensor::check_finite(const char* context) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw std::runtime_error(std::string(context) + ": non-finite value at index " +
                               std::to_string(i));
    }
  }
}

FeatureMap::FeatureMap(std::size_t c, std::size_t h, std::size_t w)
    : channels(c), height(h), width(w), values(std::vector<std::size_t>{c, h, w}) {}

FeatureMap::FeatureMap(std::size_t c, std::size_t h, std::size_t w, Tensor t)
    : channels(c), height(h), width(w), values(std::move(t)) {
  if (values.shape() != std::vector<std::size_t>{c, h, w}) {
    throw DimensionError("feature map tensor shape does not match declared C x h x w");
  }
}

}  // namespace celp
