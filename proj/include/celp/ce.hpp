#pragma once

#include <vector>

#include "celp/loss.hpp"
#include "celp/mask.hpp"
#include "celp/ops.hpp"
#include "celp/tensor.hpp"

namespace celp {

// Contrastive enhancement: prior-mask construction and decoder-input assembly
// for the main (support-conditioned) and auxiliary (latent-conditioned)
// decoder paths, plus the three-term training objective.

// h x w map of values in [0, 1), aligned with the mid-level feature grid.
struct PriorMask {
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor values;  // shape {height, width}

  double at_pos(std::size_t p) const { return values.get(p); }
};

// (2C+1) x h x w stack: query features, expanded prototype, prior mask.
struct DecoderInput {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor values;
};

struct LossWeights {
  double ce = 0.1;   // weight on the auxiliary-path contrastive term
  double aux = 1.0;  // weight on the decoder's multi-scale term

  void validate() const;
};

// Per-position cosine between the latent prototype and the query features
// with every non-pseudo-foreground position zeroed first (those positions
// come out as 0 under the zero-vector convention), then min-max normalized.
PriorMask latent_prior_mask(const Prototype& v_l, const FeatureMap& f_m,
                            const LabelMask& m_pseudo, double eps);

// Y(i) = max over support foreground positions j of cos(F_q^h(i), F_s^h(j)),
// min-max normalized. Empty support foreground yields the all-zero prior.
PriorMask support_prior_mask(const FeatureMap& f_q_h, const FeatureMap& f_s_h,
                             const LabelMask& m_s, double eps);

// Pure concatenation [features, prototype broadcast to C x h x w, prior].
DecoderInput assemble_decoder_input(const FeatureMap& f_m, const Prototype& proto,
                                    const PriorMask& prior);

// l_main + w.ce * l_ce + w.aux * l_aux.
double total_loss(double l_main, double l_ce, double l_aux, const LossWeights& w);

// Sum over scales of cross_entropy_ignore(preds[i], masks[i]).
double multiscale_aux_loss(const std::vector<ProbabilityMap>& preds,
                           const std::vector<LabelMask>& masks);

}  // namespace celp
