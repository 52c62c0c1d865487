#pragma once

#include <cstddef>

namespace celp {

// Fixed toy geometry shared by the renderer, the backbone, and the trainer:
// 64 x 64 RGB inputs, a 4x-reduced 16 x 16 feature grid, 32 mid-level and 64
// high-level channels.
inline constexpr std::size_t kImageSize = 64;
inline constexpr std::size_t kFeatureSize = 16;
inline constexpr std::size_t kMidChannels = 32;
inline constexpr std::size_t kHighChannels = 64;

inline constexpr int kNumClasses = 12;
inline constexpr int kNumFolds = 4;

}  // namespace celp
