#include "celp/loss.hpp"

#include <algorithm>
#include <cmath>

namespace celp {

ProbabilityMap softmax2(const Tensor& logits) {
  const auto& shape = logits.shape();
  if (shape.size() != 3 || shape[0] != 2) {
    throw DimensionError("softmax2: expected a 2 x h x w logit grid");
  }
  ProbabilityMap out;
  out.height = shape[1];
  out.width = shape[2];
  out.values = Tensor(shape);
  const std::size_t n = out.positions();
  for (std::size_t p = 0; p < n; ++p) {
    const double z0 = logits.get(p);
    const double z1 = logits.get(n + p);
    const double zmax = std::max(z0, z1);
    const double e0 = std::exp(z0 - zmax);
    const double e1 = std::exp(z1 - zmax);
    const double sum = e0 + e1;
    out.values.set(p, e0 / sum);
    out.values.set(n + p, e1 / sum);
  }
  out.values.check_finite("softmax2");
  return out;
}

double cross_entropy_ignore(const ProbabilityMap& p, const LabelMask& m) {
  if (p.height != m.height || p.width != m.width) {
    throw DimensionError("cross_entropy_ignore: grids do not match");
  }
  const std::size_t n = p.positions();
  std::size_t valid = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t label = m.at_pos(i);
    if (label == LabelMask::kIgnore) continue;
    ++valid;
    acc += -std::log(std::max(p.prob(label, i), kLogClamp));
  }
  return valid == 0 ? 0.0 : acc / static_cast<double>(valid);
}

std::vector<double> cross_entropy_logit_grad(const ProbabilityMap& p, const LabelMask& m) {
  if (p.height != m.height || p.width != m.width) {
    throw DimensionError("cross_entropy_logit_grad: grids do not match");
  }
  const std::size_t n = p.positions();
  std::vector<double> grad(2 * n, 0.0);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.at_pos(i) != LabelMask::kIgnore) ++valid;
  }
  if (valid == 0) return grad;
  const double scale = 1.0 / static_cast<double>(valid);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t label = m.at_pos(i);
    if (label == LabelMask::kIgnore) continue;
    if (p.prob(label, i) <= kLogClamp) continue;  // clamped log has zero slope
    for (std::size_t cls = 0; cls < 2; ++cls) {
      const double onehot = (cls == label) ? 1.0 : 0.0;
      grad[cls * n + i] = scale * (p.prob(cls, i) - onehot);
    }
  }
  return grad;
}

}  // namespace celp
