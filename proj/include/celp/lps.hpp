#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "celp/mask.hpp"
#include "celp/ops.hpp"
#include "celp/rng.hpp"
#include "celp/tensor.hpp"

namespace celp {

// Latent prototype mining: find a region of the query background whose
// high-level features agree, label it as pseudo-foreground, and pool a
// prototype for it from the mid-level features.

struct LpsConfig {
  double delta = 0.65;     // similarity threshold in (0, 1]
  std::size_t sigma = 3;   // minimum neighbour count for a center candidate
  std::uint64_t seed = 0;  // seed the caller derives the center-draw rng from

  void validate() const;
};

// max(2, ceil(0.01 * hw)); used when no explicit sigma is configured.
std::size_t default_sigma(std::size_t hw);

struct LatentSample {
  LabelMask pseudo_mask;        // {0,1,255} at feature resolution
  Prototype prototype;          // masked GAP over pseudo-foreground
  std::size_t center_index;     // sampled center position
  std::size_t candidate_count;  // |P|
};

// N(i) = #{ j : D(i,j) >= delta and M(j) = 0 }. A background position counts
// itself (its diagonal entry is 1). Foreground and ignore positions are never
// counted.
std::vector<std::size_t> count_similar(const SimilarityMatrix& d, const LabelMask& m,
                                       double delta);

// P = { i : N(i) >= sigma and M(i) = 0 }, ascending. May be empty.
std::vector<std::size_t> candidate_set(const std::vector<std::size_t>& n,
                                       const LabelMask& m, std::size_t sigma);

// Uniform draw from P. Throws EmptyCandidateError when P is empty.
std::size_t sample_center(const std::vector<std::size_t>& p, Rng& rng);

// Partition every position into exactly one of {0,1,255}:
//   1   where D(i*,j) >= delta and M(j) = 0   (mined foreground)
//   0   where M(j) = 1                        (annotated foreground -> background)
//   255 elsewhere                             (undecided background, ignored)
// The center must lie on annotated background.
LabelMask build_pseudo_mask(const SimilarityMatrix& d, std::size_t i_star,
                            const LabelMask& m, double delta);

// Full mining chain: pairwise_cosine(F_h) -> count_similar -> candidate_set ->
// sample_center -> build_pseudo_mask -> masked_gap(F_m, M', 1). Returns
// nullopt when no candidate exists or the pseudo-mask has no foreground, in
// which case the caller skips the auxiliary term for the episode.
std::optional<LatentSample> sample_latent_prototype(const FeatureMap& f_m,
                                                    const FeatureMap& f_h,
                                                    const LabelMask& m,
                                                    const LpsConfig& cfg, Rng& rng);

}  // namespace celp
