#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "celp/ce.hpp"
#include "celp/geometry.hpp"
#include "celp/mask.hpp"
#include "celp/rng.hpp"
#include "celp/tensor.hpp"

namespace celp {

// Synthetic episodic benchmark: 12 classes (6 shape families x 2 two-tone
// textures) split into 4 folds of 3 test classes each. Scenes are hard-edged
// textured objects over a noisy background; masks are exact renderings of the
// visible pixels of each object.

enum class ShapeFamily { Disk, Rect, Triangle, Ring, Cross, Bar };

struct SyntheticClass {
  int id = 0;
  ShapeFamily shape = ShapeFamily::Disk;
  int texture = 0;                    // 0 stripes, 1 checker
  std::array<double, 3> tone_a{};    // RGB in [0,1]
  std::array<double, 3> tone_b{};
};

const std::vector<SyntheticClass>& class_table();

struct FoldSplit {
  int fold = 0;
  std::vector<int> train_classes;
  std::vector<int> test_classes;
};

// Fold f holds classes {3f, 3f+1, 3f+2} out for testing.
FoldSplit fold_split(int fold);

struct SamplePair {
  Tensor image;    // 3 x kImageSize x kImageSize
  LabelMask mask;  // kImageSize x kImageSize, {0,1}
};

struct Episode {
  std::vector<SamplePair> supports;  // K entries
  SamplePair query;
  int class_id = 0;
};

struct Scene {
  Tensor image;
  std::vector<LabelMask> masks;  // one per requested class, visible pixels only
};

// Renders the given classes (1-3) in order, later entries occluding earlier
// ones. Object position and size are drawn from rng; masks are exact.
Scene generate_scene(const std::vector<int>& class_ids, Rng& rng);

enum class Phase { Train, Test };

// Uniform class draw from the phase's class set, then K+1 independent scenes
// containing that class plus 1-2 distractors from the remaining classes.
// Distractors are labeled background. Scenes are redrawn (bounded retries)
// until the target survives nearest-neighbor reduction to the feature grid.
Episode sample_episode(const FoldSplit& split, Phase phase, std::size_t k, Rng& rng);

// Same, with the episode class fixed by the caller.
Episode sample_episode_of(int class_id, std::size_t k, Rng& rng);

// Element-wise means over K prototypes/priors, computed as running means so
// that K copies of one support reproduce the 1-shot inputs exactly.
Prototype kshot_average(const std::vector<Prototype>& protos);
PriorMask kshot_average(const std::vector<PriorMask>& priors);
std::pair<Prototype, PriorMask> kshot_average(const std::vector<Prototype>& protos,
                                              const std::vector<PriorMask>& priors);

// Pixel-wise voting over K binary predictions: foreground iff at least k of
// the K masks mark the position foreground.
LabelMask kshot_vote(const std::vector<LabelMask>& pred_masks, std::size_t k);

}  // namespace celp
