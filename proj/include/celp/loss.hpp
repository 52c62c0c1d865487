#pragma once

#include <cstddef>
#include <vector>

#include "celp/mask.hpp"
#include "celp/tensor.hpp"

namespace celp {

// Probabilities are clamped below at this value inside every log.
inline constexpr double kLogClamp = 1e-12;

// Two-class probability grid; per position the two entries are nonnegative
// and sum to 1.
struct ProbabilityMap {
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor values;  // shape {2, height, width}

  std::size_t positions() const { return height * width; }
  double prob(std::size_t cls, std::size_t p) const {
    return values.get(cls * positions() + p);
  }
};

// Per-position softmax of a 2 x h x w logit grid.
ProbabilityMap softmax2(const Tensor& logits);

// Mean of -log P(class = M(p)) over positions with M(p) != 255; 0 when every
// position is ignored.
double cross_entropy_ignore(const ProbabilityMap& p, const LabelMask& m);

// d(cross_entropy_ignore)/d(logits), laid out like the logit grid. Zero at
// ignored positions and wherever the clamp was active.
std::vector<double> cross_entropy_logit_grad(const ProbabilityMap& p, const LabelMask& m);

}  // namespace celp
