#include "celp/mask.hpp"

#include <algorithm>
#include <string>

namespace celp {

bool valid_label(std::uint8_t v) {
  return v == LabelMask::kBackground || v == LabelMask::kForeground ||
         v == LabelMask::kIgnore;
}

LabelMask::LabelMask(std::size_t h, std::size_t w, std::uint8_t fill)
    : height(h), width(w), labels(h * w, fill) {
  if (h == 0 || w == 0) throw DimensionError("label mask extents must be positive");
  if (!valid_label(fill)) throw DimensionError("label mask fill not in {0,1,255}");
}

LabelMask::LabelMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> values)
    : height(h), width(w), labels(std::move(values)) {
  if (h == 0 || w == 0) throw DimensionError("label mask extents must be positive");
  if (labels.size() != h * w) {
    throw DimensionError("label mask data length " + std::to_string(labels.size()) +
                         " does not match " + std::to_string(h * w));
  }
  for (std::uint8_t v : labels) {
    if (!valid_label(v)) {
      throw DimensionError("label mask value " + std::to_string(v) +
                           " not in {0,1,255}");
    }
  }
}

void LabelMask::set(std::size_t y, std::size_t x, std::uint8_t v) {
  set_pos(y * width + x, v);
}

void LabelMask::set_pos(std::size_t p, std::uint8_t v) {
  if (!valid_label(v)) {
    throw DimensionError("label mask value " + std::to_string(v) + " not in {0,1,255}");
  }
  labels[p] = v;
}

std::size_t LabelMask::count(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

LabelMask downsample_nearest(const LabelMask& m, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw DimensionError("downsample target must be positive");
  LabelMask out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const std::size_t sy = ((2 * y + 1) * m.height) / (2 * out_h);
    for (std::size_t x = 0; x < out_w; ++x) {
      const std::size_t sx = ((2 * x + 1) * m.width) / (2 * out_w);
      out.labels[y * out_w + x] = m.at(sy, sx);
    }
  }
  return out;
}

}  // namespace celp
