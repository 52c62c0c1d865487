#pragma once

#include <string>

#include "celp/mask.hpp"

namespace celp {

// Binary PGM (P5, maxval 255) preview of a label mask:
// background 0, foreground 255, ignore 128.
void write_mask_pgm(const std::string& path, const LabelMask& mask);

}  // namespace celp
