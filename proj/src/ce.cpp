#include "celp/ce.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace celp {

void LossWeights::validate() const {
  if (!(ce >= 0.0) || !std::isfinite(ce)) throw ConfigError("w_ce: must be finite and >= 0");
  if (!(aux >= 0.0) || !std::isfinite(aux)) throw ConfigError("w_aux: must be finite and >= 0");
}

PriorMask latent_prior_mask(const Prototype& v_l, const FeatureMap& f_m,
                            const LabelMask& m_pseudo, double eps) {
  if (v_l.channels() != f_m.channels) {
    throw DimensionError("latent_prior_mask: prototype length does not match channels");
  }
  if (m_pseudo.height != f_m.height || m_pseudo.width != f_m.width) {
    throw DimensionError("latent_prior_mask: pseudo-mask grid does not match features");
  }
  const std::size_t n = f_m.positions();
  Tensor raw({f_m.height, f_m.width});
  for (std::size_t p = 0; p < n; ++p) {
    // Non-foreground positions are zeroed before the cosine, which makes them
    // exactly 0 under the zero-vector convention.
    const double c = m_pseudo.at_pos(p) == LabelMask::kForeground
                         ? cosine_prototype(v_l, f_m, p)
                         : 0.0;
    raw.set(p, c);
  }
  PriorMask prior;
  prior.height = f_m.height;
  prior.width = f_m.width;
  prior.values = minmax_normalize(raw, eps);
  return prior;
}

PriorMask support_prior_mask(const FeatureMap& f_q_h, const FeatureMap& f_s_h,
                             const LabelMask& m_s, double eps) {
  if (f_q_h.channels != f_s_h.channels) {
    throw DimensionError("support_prior_mask: channel counts differ");
  }
  if (m_s.height != f_s_h.height || m_s.width != f_s_h.width) {
    throw DimensionError("support_prior_mask: support mask grid does not match features");
  }
  PriorMask prior;
  prior.height = f_q_h.height;
  prior.width = f_q_h.width;

  std::vector<std::size_t> fg;
  for (std::size_t j = 0; j < m_s.positions(); ++j) {
    if (m_s.at_pos(j) == LabelMask::kForeground) fg.push_back(j);
  }
  if (fg.empty()) {
    // Degenerate episodes still train on the main path with a flat prior.
    prior.values = Tensor({f_q_h.height, f_q_h.width});
    return prior;
  }
  Tensor raw({f_q_h.height, f_q_h.width});
  for (std::size_t i = 0; i < f_q_h.positions(); ++i) {
    double best = -2.0;
    for (std::size_t j : fg) {
      best = std::max(best, cosine_positions(f_q_h, i, f_s_h, j));
    }
    raw.set(i, best);
  }
  prior.values = minmax_normalize(raw, eps);
  return prior;
}

DecoderInput assemble_decoder_input(const FeatureMap& f_m, const Prototype& proto,
                                    const PriorMask& prior) {
  if (proto.channels() != f_m.channels) {
    throw DimensionError("assemble_decoder_input: prototype length does not match channels");
  }
  if (prior.height != f_m.height || prior.width != f_m.width) {
    throw DimensionError("assemble_decoder_input: prior grid does not match features");
  }
  const std::size_t c = f_m.channels;
  const std::size_t n = f_m.positions();
  DecoderInput input;
  input.channels = 2 * c + 1;
  input.height = f_m.height;
  input.width = f_m.width;
  input.values = Tensor({input.channels, input.height, input.width});
  for (std::size_t i = 0; i < c * n; ++i) input.values.set(i, f_m.values.get(i));
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double v = proto.at(ch);
    for (std::size_t p = 0; p < n; ++p) input.values.set((c + ch) * n + p, v);
  }
  for (std::size_t p = 0; p < n; ++p) input.values.set(2 * c * n + p, prior.at_pos(p));
  return input;
}

double total_loss(double l_main, double l_ce, double l_aux, const LossWeights& w) {
  return l_main + w.ce * l_ce + w.aux * l_aux;
}

double multiscale_aux_loss(const std::vector<ProbabilityMap>& preds,
                           const std::vector<LabelMask>& masks) {
  if (preds.size() != masks.size() || preds.empty()) {
    throw DimensionError("multiscale_aux_loss: prediction/mask list lengths " +
                         std::to_string(preds.size()) + " vs " +
                         std::to_string(masks.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    acc += cross_entropy_ignore(preds[i], masks[i]);
  }
  return acc;
}

}  // namespace celp
