#include "celp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace celp {

namespace {

double strided_dot(const double* a, const double* b, std::size_t n, std::size_t stride) {
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) acc += a[c * stride] * b[c * stride];
  return acc;
}

double cosine_from_parts(double dot, double norm_a, double norm_b) {
  if (norm_a < kZeroNormThreshold || norm_b < kZeroNormThreshold) return 0.0;
  return dot / (norm_a * norm_b);
}

}  // namespace

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size() || u.empty()) {
    throw DimensionError("cosine: vector lengths " + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  return cosine_from_parts(dot, std::sqrt(uu), std::sqrt(vv));
}

double cosine_positions(const FeatureMap& a, std::size_t p, const FeatureMap& b,
                        std::size_t q) {
  if (a.channels != b.channels) {
    throw DimensionError("cosine_positions: channel counts differ");
  }
  const std::size_t sa = a.positions(), sb = b.positions();
  const double* pa = a.values.data() + p;
  const double* pb = b.values.data() + q;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < a.channels; ++c) {
    const double x = pa[c * sa];
    const double y = pb[c * sb];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return cosine_from_parts(dot, std::sqrt(na), std::sqrt(nb));
}

double cosine_prototype(const Prototype& proto, const FeatureMap& f, std::size_t p) {
  if (proto.channels() != f.channels) {
    throw DimensionError("cosine_prototype: channel counts differ");
  }
  const std::size_t s = f.positions();
  const double* pf = f.values.data() + p;
  double dot = 0.0, np = 0.0, nf = 0.0;
  for (std::size_t c = 0; c < f.channels; ++c) {
    const double x = proto.at(c);
    const double y = pf[c * s];
    dot += x * y;
    np += x * x;
    nf += y * y;
  }
  return cosine_from_parts(dot, std::sqrt(np), std::sqrt(nf));
}

SimilarityMatrix pairwise_cosine(const FeatureMap& f) {
  const std::size_t n = f.positions();
  const std::size_t stride = n;
  std::vector<double> norms(n);
  for (std::size_t p = 0; p < n; ++p) {
    norms[p] = std::sqrt(strided_dot(f.values.data() + p, f.values.data() + p,
                                     f.channels, stride));
  }
  SimilarityMatrix d;
  d.n = n;
  d.values = Tensor({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    d.values.set(i * n + i, norms[i] >= kZeroNormThreshold ? 1.0 : 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dot =
          strided_dot(f.values.data() + i, f.values.data() + j, f.channels, stride);
      const double c = cosine_from_parts(dot, norms[i], norms[j]);
      d.values.set(i * n + j, c);
      d.values.set(j * n + i, c);
    }
  }
  d.values.check_finite("pairwise_cosine");
  return d;
}

Prototype masked_gap(const FeatureMap& f, const LabelMask& m, std::uint8_t label) {
  if (m.height != f.height || m.width != f.width) {
    throw DimensionError("masked_gap: mask grid does not match feature map");
  }
  const std::size_t n = f.positions();
  std::size_t count = 0;
  std::vector<double> sum(f.channels, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    if (m.at_pos(p) != label) continue;
    ++count;
    for (std::size_t c = 0; c < f.channels; ++c) sum[c] += f.at_pos(c, p);
  }
  if (count == 0) {
    throw EmptyRegionError("masked_gap: no position carries label " +
                           std::to_string(label));
  }
  Prototype proto;
  proto.values = Tensor({f.channels});
  for (std::size_t c = 0; c < f.channels; ++c) {
    proto.values.set(c, sum[c] / static_cast<double>(count));
  }
  proto.values.check_finite("masked_gap");
  return proto;
}

Tensor minmax_normalize(const Tensor& h, double eps) {
  if (h.empty()) throw DimensionError("minmax_normalize: empty tensor");
  if (!(eps > 0.0)) throw DimensionError("minmax_normalize: eps must be positive");
  const auto [lo_it, hi_it] = std::minmax_element(h.values().begin(), h.values().end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  Tensor out(h.shape());
  for (std::size_t i = 0; i < h.size(); ++i) {
    out.set(i, (h.get(i) - lo) / (range + eps));
  }
  out.check_finite("minmax_normalize");
  return out;
}

}  // namespace celp
