#include "celp/lps.hpp"

#include <cmath>
#include <string>

namespace celp {

void LpsConfig::validate() const {
  if (!(delta > 0.0) || delta > 1.0) {
    throw ConfigError("delta: must lie in (0, 1], got " + std::to_string(delta));
  }
  if (sigma < 1) throw ConfigError("sigma: must be >= 1");
}

std::size_t default_sigma(std::size_t hw) {
  const auto scaled = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(hw)));
  return std::max<std::size_t>(2, scaled);
}

std::vector<std::size_t> count_similar(const SimilarityMatrix& d, const LabelMask& m,
                                       double delta) {
  if (m.positions() != d.n) {
    throw DimensionError("count_similar: mask has " + std::to_string(m.positions()) +
                         " positions, similarity matrix expects " + std::to_string(d.n));
  }
  std::vector<std::size_t> counts(d.n, 0);
  for (std::size_t i = 0; i < d.n; ++i) {
    std::size_t n = 0;
    for (std::size_t j = 0; j < d.n; ++j) {
      if (d.at(i, j) >= delta && m.at_pos(j) == LabelMask::kBackground) ++n;
    }
    counts[i] = n;
  }
  return counts;
}

std::vector<std::size_t> candidate_set(const std::vector<std::size_t>& n,
                                       const LabelMask& m, std::size_t sigma) {
  if (n.size() != m.positions()) {
    throw DimensionError("candidate_set: count vector length does not match mask");
  }
  std::vector<std::size_t> p;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] >= sigma && m.at_pos(i) == LabelMask::kBackground) p.push_back(i);
  }
  return p;
}

std::size_t sample_center(const std::vector<std::size_t>& p, Rng& rng) {
  if (p.empty()) throw EmptyCandidateError("sample_center: candidate set is empty");
  return p[rng.bounded(p.size())];
}

LabelMask build_pseudo_mask(const SimilarityMatrix& d, std::size_t i_star,
                            const LabelMask& m, double delta) {
  if (m.positions() != d.n) {
    throw DimensionError("build_pseudo_mask: mask grid does not match similarity matrix");
  }
  if (i_star >= d.n) throw InvalidCenterError("build_pseudo_mask: center index out of range");
  if (m.at_pos(i_star) != LabelMask::kBackground) {
    throw InvalidCenterError("build_pseudo_mask: center position " +
                             std::to_string(i_star) + " is not annotated background");
  }
  LabelMask out(m.height, m.width);
  for (std::size_t j = 0; j < d.n; ++j) {
    if (m.at_pos(j) == LabelMask::kForeground) {
      out.labels[j] = LabelMask::kBackground;
    } else if (m.at_pos(j) == LabelMask::kBackground && d.at(i_star, j) >= delta) {
      out.labels[j] = LabelMask::kForeground;
    } else {
      out.labels[j] = LabelMask::kIgnore;
    }
  }
  return out;
}

std::optional<LatentSample> sample_latent_prototype(const FeatureMap& f_m,
                                                    const FeatureMap& f_h,
                                                    const LabelMask& m,
                                                    const LpsConfig& cfg, Rng& rng) {
  cfg.validate();
  if (f_m.height != f_h.height || f_m.width != f_h.width) {
    throw DimensionError("sample_latent_prototype: feature maps disagree on grid");
  }
  if (m.height != f_h.height || m.width != f_h.width) {
    throw DimensionError("sample_latent_prototype: mask grid does not match features");
  }
  const SimilarityMatrix d = pairwise_cosine(f_h);
  const std::vector<std::size_t> counts = count_similar(d, m, cfg.delta);
  const std::vector<std::size_t> candidates = candidate_set(counts, m, cfg.sigma);
  if (candidates.empty()) return std::nullopt;

  const std::size_t center = sample_center(candidates, rng);
  LabelMask pseudo = build_pseudo_mask(d, center, m, cfg.delta);
  if (pseudo.count(LabelMask::kForeground) == 0) return std::nullopt;

  LatentSample sample;
  sample.prototype = masked_gap(f_m, pseudo, LabelMask::kForeground);
  sample.pseudo_mask = std::move(pseudo);
  sample.center_index = center;
  sample.candidate_count = candidates.size();
  return sample;
}

}  // namespace celp
