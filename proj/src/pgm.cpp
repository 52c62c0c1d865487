#include "celp/pgm.hpp"

#include <fstream>

#include "celp/errors.hpp"

namespace celp {

void write_mask_pgm(const std::string& path, const LabelMask& mask) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("pgm: cannot write " + path);
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  for (std::uint8_t v : mask.labels) {
    char pixel;
    switch (v) {
      case LabelMask::kForeground: pixel = static_cast<char>(255); break;
      case LabelMask::kIgnore: pixel = static_cast<char>(128); break;
      default: pixel = 0; break;
    }
    out.put(pixel);
  }
  if (!out) throw FormatError("pgm: short write to " + path);
}

}  // namespace celp
