#include "celp/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace celp {

namespace {

std::size_t conv_out_extent(std::size_t in, const ConvShape& s) {
  return (in + 2 * s.pad - s.kernel) / s.stride + 1;
}

// out[oc][oy][ox] = bias[oc] + sum_{ic,ky,kx} w[oc][ic][ky][kx] * in[ic][iy][ix]
void conv_forward(const ConvShape& s, const double* params, const double* in,
                  std::size_t in_h, std::size_t in_w, double* out) {
  const std::size_t out_h = conv_out_extent(in_h, s);
  const std::size_t out_w = conv_out_extent(in_w, s);
  const double* w = params + s.weight_offset;
  const double* b = params + s.bias_offset;
  for (std::size_t oc = 0; oc < s.out_c; ++oc) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = b[oc];
        const long base_y = static_cast<long>(oy * s.stride) - static_cast<long>(s.pad);
        const long base_x = static_cast<long>(ox * s.stride) - static_cast<long>(s.pad);
        for (std::size_t ic = 0; ic < s.in_c; ++ic) {
          const double* in_plane = in + ic * in_h * in_w;
          const double* w_plane = w + (oc * s.in_c + ic) * s.kernel * s.kernel;
          for (std::size_t ky = 0; ky < s.kernel; ++ky) {
            const long iy = base_y + static_cast<long>(ky);
            if (iy < 0 || iy >= static_cast<long>(in_h)) continue;
            for (std::size_t kx = 0; kx < s.kernel; ++kx) {
              const long ix = base_x + static_cast<long>(kx);
              if (ix < 0 || ix >= static_cast<long>(in_w)) continue;
              acc += w_plane[ky * s.kernel + kx] *
                     in_plane[static_cast<std::size_t>(iy) * in_w +
                              static_cast<std::size_t>(ix)];
            }
          }
        }
        out[(oc * out_h + oy) * out_w + ox] = quantize(acc);
      }
    }
  }
}

// Accumulates weight/bias gradients; optionally accumulates input gradients.
void conv_backward(const ConvShape& s, const double* params, const double* in,
                   std::size_t in_h, std::size_t in_w, const double* d_out,
                   double* d_params, double* d_in) {
  const std::size_t out_h = conv_out_extent(in_h, s);
  const std::size_t out_w = conv_out_extent(in_w, s);
  const double* w = params + s.weight_offset;
  double* d_w = d_params + s.weight_offset;
  double* d_b = d_params + s.bias_offset;
  for (std::size_t oc = 0; oc < s.out_c; ++oc) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const double g = d_out[(oc * out_h + oy) * out_w + ox];
        if (g == 0.0) continue;
        d_b[oc] += g;
        const long base_y = static_cast<long>(oy * s.stride) - static_cast<long>(s.pad);
        const long base_x = static_cast<long>(ox * s.stride) - static_cast<long>(s.pad);
        for (std::size_t ic = 0; ic < s.in_c; ++ic) {
          const double* in_plane = in + ic * in_h * in_w;
          const std::size_t w_base = (oc * s.in_c + ic) * s.kernel * s.kernel;
          for (std::size_t ky = 0; ky < s.kernel; ++ky) {
            const long iy = base_y + static_cast<long>(ky);
            if (iy < 0 || iy >= static_cast<long>(in_h)) continue;
            for (std::size_t kx = 0; kx < s.kernel; ++kx) {
              const long ix = base_x + static_cast<long>(kx);
              if (ix < 0 || ix >= static_cast<long>(in_w)) continue;
              const std::size_t in_idx = ic * in_h * in_w +
                                         static_cast<std::size_t>(iy) * in_w +
                                         static_cast<std::size_t>(ix);
              d_w[w_base + ky * s.kernel + kx] += g * in_plane[static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)];
              if (d_in != nullptr) {
                d_in[in_idx] += g * w[w_base + ky * s.kernel + kx];
              }
            }
          }
        }
      }
    }
  }
}

void relu_inplace(std::vector<double>& v) {
  for (double& x : v) {
    if (x < 0.0) x = 0.0;
  }
}

// d_pre = d_post where the stored post-activation is positive, else 0.
void relu_backward_inplace(const std::vector<double>& post, std::vector<double>& d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (post[i] <= 0.0) d[i] = 0.0;
  }
}

void avgpool2_forward(const std::vector<double>& in, std::size_t c, std::size_t h,
                      std::size_t w, std::vector<double>& out) {
  const std::size_t oh = h / 2, ow = w / 2;
  out.assign(c * oh * ow, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t base = ch * h * w + 2 * y * w + 2 * x;
        const double sum = in[base] + in[base + 1] + in[base + w] + in[base + w + 1];
        out[(ch * oh + y) * ow + x] = quantize(0.25 * sum);
      }
    }
  }
}

void avgpool2_backward(const std::vector<double>& d_out, std::size_t c, std::size_t h,
                       std::size_t w, std::vector<double>& d_in) {
  const std::size_t oh = h / 2, ow = w / 2;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double g = 0.25 * d_out[(ch * oh + y) * ow + x];
        const std::size_t base = ch * h * w + 2 * y * w + 2 * x;
        d_in[base] += g;
        d_in[base + 1] += g;
        d_in[base + w] += g;
        d_in[base + w + 1] += g;
      }
    }
  }
}

std::vector<ConvShape> layout_layers(std::vector<ConvShape> layers) {
  std::size_t offset = 0;
  for (ConvShape& s : layers) {
    s.weight_offset = offset;
    offset += s.weight_count();
    s.bias_offset = offset;
    offset += s.out_c;
  }
  return layers;
}

std::size_t total_params(const std::vector<ConvShape>& layers) {
  const ConvShape& last = layers.back();
  return last.bias_offset + last.out_c;
}

void he_init(const std::vector<ConvShape>& layers, std::vector<double>& params,
             std::uint64_t seed) {
  Rng rng(derive_stream(seed, "init"));
  for (const ConvShape& s : layers) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(s.in_c * s.kernel * s.kernel));
    for (std::size_t i = 0; i < s.weight_count(); ++i) {
      params[s.weight_offset + i] = quantize(stddev * rng.normal());
    }
    for (std::size_t i = 0; i < s.out_c; ++i) params[s.bias_offset + i] = 0.0;
  }
}

}  // namespace

Backbone::Backbone(std::uint64_t seed) {
  layers_ = layout_layers({
      {3, 16, 3, 2, 1},
      {16, kMidChannels, 3, 2, 1},
      {kMidChannels, kHighChannels, 3, 1, 1},
  });
  params_.assign(total_params(layers_), 0.0);
  he_init(layers_, params_, seed);
  // Frozen stand-in for a pretrained extractor: biases stay zero so a zero
  // image maps to zero features.
}

std::pair<FeatureMap, FeatureMap> Backbone::extract(const Tensor& image) const {
  if (image.shape() != std::vector<std::size_t>{3, kImageSize, kImageSize}) {
    throw DimensionError("extract: expected a 3 x 64 x 64 image");
  }
  const std::size_t half = kImageSize / 2;
  std::vector<double> a0(16 * half * half);
  conv_forward(layers_[0], params_.data(), image.data(), kImageSize, kImageSize, a0.data());
  relu_inplace(a0);

  std::vector<double> a1(kMidChannels * kFeatureSize * kFeatureSize);
  conv_forward(layers_[1], params_.data(), a0.data(), half, half, a1.data());
  relu_inplace(a1);

  std::vector<double> a2(kHighChannels * kFeatureSize * kFeatureSize);
  conv_forward(layers_[2], params_.data(), a1.data(), kFeatureSize, kFeatureSize, a2.data());
  relu_inplace(a2);

  FeatureMap f_m(kMidChannels, kFeatureSize, kFeatureSize,
                 Tensor({kMidChannels, kFeatureSize, kFeatureSize}, std::move(a1)));
  FeatureMap f_h(kHighChannels, kFeatureSize, kFeatureSize,
                 Tensor({kHighChannels, kFeatureSize, kFeatureSize}, std::move(a2)));
  f_m.values.check_finite("extract_features mid");
  f_h.values.check_finite("extract_features high");
  return {std::move(f_m), std::move(f_h)};
}

Decoder::Decoder(std::size_t in_channels, std::size_t hidden, std::uint64_t seed)
    : in_channels_(in_channels), hidden_(hidden) {
  layers_ = layout_layers({
      {in_channels, hidden, 3, 1, 1},  // conv0
      {hidden, hidden, 3, 1, 1},       // conv1
      {hidden, 2, 1, 1, 0},            // head0, full grid
      {hidden, hidden, 3, 1, 1},       // conv2, coarse grid
      {hidden, 2, 1, 1, 0},            // head1
  });
  params_.assign(total_params(layers_), 0.0);
  he_init(layers_, params_, seed);
}

std::vector<std::pair<std::size_t, std::size_t>> Decoder::parameter_spans() const {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  spans.reserve(layers_.size());
  for (const ConvShape& s : layers_) {
    spans.emplace_back(s.weight_offset, s.weight_count() + s.out_c);
  }
  return spans;
}

Decoder::Trace Decoder::forward_trace(const DecoderInput& x) const {
  if (x.channels != in_channels_) {
    throw DimensionError("decoder_forward: input has " + std::to_string(x.channels) +
                         " channels, decoder expects " + std::to_string(in_channels_));
  }
  const std::size_t h = x.height, w = x.width;
  Trace t;
  t.input = x.values.values();

  t.a0.assign(hidden_ * h * w, 0.0);
  conv_forward(layers_[0], params_.data(), t.input.data(), h, w, t.a0.data());
  relu_inplace(t.a0);

  t.a1.assign(hidden_ * h * w, 0.0);
  conv_forward(layers_[1], params_.data(), t.a0.data(), h, w, t.a1.data());
  relu_inplace(t.a1);

  std::vector<double> z0(2 * h * w);
  conv_forward(layers_[2], params_.data(), t.a1.data(), h, w, z0.data());
  t.logits0 = Tensor({2, h, w}, std::move(z0));

  avgpool2_forward(t.a1, hidden_, h, w, t.pooled);
  const std::size_t ch = h / 2, cw = w / 2;

  t.a2.assign(hidden_ * ch * cw, 0.0);
  conv_forward(layers_[3], params_.data(), t.pooled.data(), ch, cw, t.a2.data());
  relu_inplace(t.a2);

  std::vector<double> z1(2 * ch * cw);
  conv_forward(layers_[4], params_.data(), t.a2.data(), ch, cw, z1.data());
  t.logits1 = Tensor({2, ch, cw}, std::move(z1));

  t.probs.push_back(softmax2(t.logits0));
  t.probs.push_back(softmax2(t.logits1));
  return t;
}

std::vector<ProbabilityMap> Decoder::forward(const DecoderInput& x) const {
  return forward_trace(x).probs;
}

void Decoder::backward(const Trace& trace,
                       const std::array<std::vector<double>, 2>& dlogits,
                       std::vector<double>& grads) const {
  const std::size_t h = trace.probs[0].height, w = trace.probs[0].width;
  const std::size_t ch = h / 2, cw = w / 2;
  if (grads.size() != params_.size()) {
    throw DimensionError("backward: gradient buffer size does not match parameters");
  }

  // head1 -> a2
  std::vector<double> d_a2(hidden_ * ch * cw, 0.0);
  conv_backward(layers_[4], params_.data(), trace.a2.data(), ch, cw, dlogits[1].data(),
                grads.data(), d_a2.data());
  relu_backward_inplace(trace.a2, d_a2);

  // conv2 -> pooled
  std::vector<double> d_pooled(hidden_ * ch * cw, 0.0);
  conv_backward(layers_[3], params_.data(), trace.pooled.data(), ch, cw, d_a2.data(),
                grads.data(), d_pooled.data());

  // pooled + head0 -> a1
  std::vector<double> d_a1(hidden_ * h * w, 0.0);
  avgpool2_backward(d_pooled, hidden_, h, w, d_a1);
  conv_backward(layers_[2], params_.data(), trace.a1.data(), h, w, dlogits[0].data(),
                grads.data(), d_a1.data());
  relu_backward_inplace(trace.a1, d_a1);

  // conv1 -> a0
  std::vector<double> d_a0(hidden_ * h * w, 0.0);
  conv_backward(layers_[1], params_.data(), trace.a0.data(), h, w, d_a1.data(),
                grads.data(), d_a0.data());
  relu_backward_inplace(trace.a0, d_a0);

  // conv0; input gradient not needed (inputs are frozen features)
  conv_backward(layers_[0], params_.data(), trace.input.data(), h, w, d_a0.data(),
                grads.data(), nullptr);
}

double poly_lr(double base_lr, std::uint64_t step, std::uint64_t total_steps) {
  const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * std::pow(frac, 0.9);
}

void sgd_poly_step(TrainState& state, const std::vector<double>& grads) {
  if (state.step >= state.total_steps) {
    throw std::runtime_error("sgd_poly_step: step counter exceeds total_steps");
  }
  if (grads.size() != state.decoder.parameter_count()) {
    throw DimensionError("sgd_poly_step: gradient size does not match parameters");
  }
  const double lr = poly_lr(state.base_lr, state.step, state.total_steps);
  std::vector<double>& params = state.decoder.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = quantize(params[i] - lr * grads[i]);
  }
  ++state.step;
}

std::optional<EpisodeBatch> prepare_episode(const Episode& episode,
                                            const Backbone& backbone,
                                            const LpsConfig& lps_cfg, Rng& lps_rng,
                                            double eps, bool mine_latent) {
  const auto [f_q_m, f_q_h] = backbone.extract(episode.query.image);
  const LabelMask m_q = downsample_nearest(episode.query.mask, f_q_m.height, f_q_m.width);

  std::vector<Prototype> protos;
  std::vector<PriorMask> priors;
  for (const SamplePair& support : episode.supports) {
    const auto [f_s_m, f_s_h] = backbone.extract(support.image);
    const LabelMask m_s = downsample_nearest(support.mask, f_s_m.height, f_s_m.width);
    if (m_s.count(LabelMask::kForeground) == 0) return std::nullopt;
    protos.push_back(masked_gap(f_s_m, m_s, LabelMask::kForeground));
    priors.push_back(support_prior_mask(f_q_h, f_s_h, m_s, eps));
  }
  auto [v_s, h_q] = kshot_average(protos, priors);

  EpisodeBatch batch;
  batch.main_input = assemble_decoder_input(f_q_m, v_s, h_q);
  batch.main_masks.push_back(m_q);
  batch.main_masks.push_back(
      downsample_nearest(m_q, f_q_m.height / 2, f_q_m.width / 2));

  if (mine_latent) {
    if (auto latent = sample_latent_prototype(f_q_m, f_q_h, m_q, lps_cfg, lps_rng)) {
      const PriorMask h_latent =
          latent_prior_mask(latent->prototype, f_q_m, latent->pseudo_mask, eps);
      batch.aux_input = assemble_decoder_input(f_q_m, latent->prototype, h_latent);
      batch.aux_mask = std::move(latent->pseudo_mask);
      batch.has_aux = true;
    }
  }
  return batch;
}

LossTerms episode_loss(const Decoder& decoder, const EpisodeBatch& batch) {
  LossTerms terms;
  const std::vector<ProbabilityMap> preds = decoder.forward(batch.main_input);
  terms.l_main = cross_entropy_ignore(preds[0], batch.main_masks[0]);
  terms.l_aux = multiscale_aux_loss(preds, batch.main_masks);
  if (batch.has_aux) {
    const std::vector<ProbabilityMap> aux_preds = decoder.forward(batch.aux_input);
    terms.l_ce = cross_entropy_ignore(aux_preds[0], batch.aux_mask);
    terms.ce_fired = true;
  }
  return terms;
}

LossTerms episode_loss_grad(const Decoder& decoder, const EpisodeBatch& batch,
                            const LossWeights& w, std::vector<double>& grads) {
  LossTerms terms;
  const Decoder::Trace trace = decoder.forward_trace(batch.main_input);
  terms.l_main = cross_entropy_ignore(trace.probs[0], batch.main_masks[0]);
  terms.l_aux = multiscale_aux_loss(trace.probs, batch.main_masks);

  // The full-grid head serves both the primary term and the first scale of
  // the multi-scale term.
  std::array<std::vector<double>, 2> dlogits;
  dlogits[0] = cross_entropy_logit_grad(trace.probs[0], batch.main_masks[0]);
  for (double& g : dlogits[0]) g *= 1.0 + w.aux;
  dlogits[1] = cross_entropy_logit_grad(trace.probs[1], batch.main_masks[1]);
  for (double& g : dlogits[1]) g *= w.aux;
  decoder.backward(trace, dlogits, grads);

  if (batch.has_aux) {
    const Decoder::Trace aux_trace = decoder.forward_trace(batch.aux_input);
    terms.l_ce = cross_entropy_ignore(aux_trace.probs[0], batch.aux_mask);
    terms.ce_fired = true;
    std::array<std::vector<double>, 2> aux_dlogits;
    aux_dlogits[0] = cross_entropy_logit_grad(aux_trace.probs[0], batch.aux_mask);
    for (double& g : aux_dlogits[0]) g *= w.ce;
    aux_dlogits[1].assign(aux_trace.logits1.size(), 0.0);
    decoder.backward(aux_trace, aux_dlogits, grads);
  }
  return terms;
}

LossReport train_episode(TrainState& state, const Episode& episode,
                         const Backbone& backbone, Rng& lps_rng, double eps) {
  LossReport report;
  report.lr = poly_lr(state.base_lr, state.step, state.total_steps);

  const bool mine = state.enable_ce && state.weights.ce > 0.0;
  const std::optional<EpisodeBatch> batch =
      prepare_episode(episode, backbone, state.lps, lps_rng, eps, mine);
  if (!batch) {
    ++state.skipped_count;
    report.skipped = true;
    return report;
  }
  if (mine && !batch->has_aux) ++state.ce_absent_count;

  std::vector<double> grads(state.decoder.parameter_count(), 0.0);
  const LossTerms terms = episode_loss_grad(state.decoder, *batch, state.weights, grads);
  report.l_main = terms.l_main;
  report.l_ce = terms.l_ce;
  report.l_aux = terms.l_aux;
  report.ce_fired = terms.ce_fired;
  report.total = total_loss(terms.l_main, terms.l_ce, terms.l_aux, state.weights);
  sgd_poly_step(state, grads);
  return report;
}

namespace {
constexpr char kCheckpointMagic[8] = {'C', 'E', 'L', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Decoder& decoder, std::uint64_t step) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("checkpoint: cannot write " + path);
  out.write(kCheckpointMagic, 8);
  out.write(reinterpret_cast<const char*>(&kCheckpointVersion), 4);
  const std::uint64_t count = decoder.parameter_count();
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(decoder.parameters().data()),
            static_cast<std::streamsize>(count * 8));
  out.write(reinterpret_cast<const char*>(&step), 8);
  if (!out) throw FormatError("checkpoint: short write to " + path);
}

std::uint64_t load_checkpoint(const std::string& path, Decoder& decoder) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw FormatError("checkpoint: bad magic at byte offset 0 in " + path);
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (in.gcount() != 4 || version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version at byte offset 8");
  }
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  if (in.gcount() != 8) throw FormatError("checkpoint: truncated header at byte offset 12");
  if (count != decoder.parameter_count()) {
    throw DimensionError("checkpoint: holds " + std::to_string(count) +
                         " parameters, decoder expects " +
                         std::to_string(decoder.parameter_count()));
  }
  in.read(reinterpret_cast<char*>(decoder.parameters().data()),
          static_cast<std::streamsize>(count * 8));
  if (static_cast<std::uint64_t>(in.gcount()) != count * 8) {
    throw FormatError("checkpoint: truncated parameter payload at byte offset 20");
  }
  std::uint64_t step = 0;
  in.read(reinterpret_cast<char*>(&step), 8);
  if (in.gcount() != 8) {
    throw FormatError("checkpoint: truncated step counter at byte offset " +
                      std::to_string(20 + count * 8));
  }
  return step;
}

}  // namespace celp
