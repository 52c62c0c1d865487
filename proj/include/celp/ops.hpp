#pragma once

#include <cstdint>
#include <vector>

#include "celp/mask.hpp"
#include "celp/tensor.hpp"

namespace celp {

// Norms below this are treated as zero vectors; their cosine is defined as 0
// so degenerate positions never propagate NaN into masks.
inline constexpr double kZeroNormThreshold = 1e-12;

// u.v / (|u||v|), 0 if either norm is below kZeroNormThreshold.
double cosine(const std::vector<double>& u, const std::vector<double>& v);

// Cosine between the feature vectors at positions p and q of two maps with
// equal channel counts.
double cosine_positions(const FeatureMap& a, std::size_t p, const FeatureMap& b,
                        std::size_t q);

// Cosine between a prototype and the feature vector at position p.
double cosine_prototype(const Prototype& proto, const FeatureMap& f, std::size_t p);

// All-pairs cosine table over the positions of F. Computed once per pair and
// mirrored, so the result is exactly symmetric; diagonal entries are set to 1
// for positions with nonzero norm and 0 otherwise.
SimilarityMatrix pairwise_cosine(const FeatureMap& f);

// Channel-wise mean of F over positions where M carries `label`.
// Throws EmptyRegionError when no position matches.
Prototype masked_gap(const FeatureMap& f, const LabelMask& m, std::uint8_t label);

// (H - min) / (max - min + eps); constant inputs map to all zeros.
Tensor minmax_normalize(const Tensor& h, double eps);

}  // namespace celp
