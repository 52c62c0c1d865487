#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "celp/errors.hpp"

namespace celp {

// h x w label grid over {0 background, 1 foreground, 255 ignore}. 255 marks
// positions excluded from loss computation. Position index is row-major,
// matching FeatureMap.
struct LabelMask {
  static constexpr std::uint8_t kBackground = 0;
  static constexpr std::uint8_t kForeground = 1;
  static constexpr std::uint8_t kIgnore = 255;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  LabelMask() = default;
  LabelMask(std::size_t h, std::size_t w, std::uint8_t fill = kBackground);
  LabelMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> values);

  std::size_t positions() const { return height * width; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  std::uint8_t at_pos(std::size_t p) const { return labels[p]; }
  void set(std::size_t y, std::size_t x, std::uint8_t v);
  void set_pos(std::size_t p, std::uint8_t v);

  std::size_t count(std::uint8_t label) const;
};

bool valid_label(std::uint8_t v);

// Nearest-neighbor reduction to out_h x out_w. Source index for output cell i
// is ((2*i+1)*in_extent) / (2*out_extent), i.e. the sample closest to the
// cell center. Labels pass through unchanged.
LabelMask downsample_nearest(const LabelMask& m, std::size_t out_h, std::size_t out_w);

}  // namespace celp
