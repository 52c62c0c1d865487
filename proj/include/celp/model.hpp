#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "celp/ce.hpp"
#include "celp/episodes.hpp"
#include "celp/geometry.hpp"
#include "celp/loss.hpp"
#include "celp/lps.hpp"
#include "celp/rng.hpp"

namespace celp {

// Flat-parameter convolution stacks. The backbone is frozen after seeded
// construction; the decoder is the only trainable component and is shared by
// the main and auxiliary paths.

struct ConvShape {
  std::size_t in_c = 0, out_c = 0, kernel = 3, stride = 1, pad = 1;
  std::size_t weight_offset = 0, bias_offset = 0;

  std::size_t weight_count() const { return in_c * out_c * kernel * kernel; }
};

// Frozen feature extractor: 3 x 64 x 64 -> F_m (32 x 16 x 16) and
// F_h (64 x 16 x 16). Bias-free, so a zero image yields zero features.
class Backbone {
 public:
  explicit Backbone(std::uint64_t seed);

  std::pair<FeatureMap, FeatureMap> extract(const Tensor& image) const;

  const std::vector<double>& parameters() const { return params_; }

 private:
  std::vector<ConvShape> layers_;
  std::vector<double> params_;
};

// Two-scale decoder over a (2C+1)-channel input: two 3x3 conv+relu stages and
// a 1x1 head at the full grid, then 2x average pooling, one more conv+relu
// stage and a second head at the coarse grid.
class Decoder {
 public:
  Decoder(std::size_t in_channels, std::size_t hidden, std::uint64_t seed);

  std::size_t in_channels() const { return in_channels_; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<double>& parameters() const { return params_; }
  std::vector<double>& parameters() { return params_; }

  // (offset, count) of each layer's parameter block, in forward order.
  std::vector<std::pair<std::size_t, std::size_t>> parameter_spans() const;

  struct Trace {
    std::vector<double> input;                      // copy of the decoder input
    std::vector<double> a0, a1, pooled, a2;         // post-relu activations
    Tensor logits0, logits1;                        // 2 x 16 x 16, 2 x 8 x 8
    std::vector<ProbabilityMap> probs;              // per scale
  };

  std::vector<ProbabilityMap> forward(const DecoderInput& x) const;
  Trace forward_trace(const DecoderInput& x) const;

  // Accumulates d(total)/d(parameters) into `grads` given per-scale gradients
  // with respect to the logits.
  void backward(const Trace& trace,
                const std::array<std::vector<double>, 2>& dlogits,
                std::vector<double>& grads) const;

 private:
  std::size_t in_channels_ = 0;
  std::size_t hidden_ = 0;
  std::vector<ConvShape> layers_;  // conv0, conv1, head0, conv2, head1
  std::vector<double> params_;
};

// lr(step) = base * (1 - step/total)^0.9.
double poly_lr(double base_lr, std::uint64_t step, std::uint64_t total_steps);

struct TrainState {
  explicit TrainState(Decoder d) : decoder(std::move(d)) {}

  Decoder decoder;
  double base_lr = 0.01;
  std::uint64_t step = 0;
  std::uint64_t total_steps = 0;
  LossWeights weights;
  LpsConfig lps;
  bool enable_ce = true;  // auxiliary path runs only if enabled and w_ce > 0

  std::uint64_t ce_absent_count = 0;  // mining found no candidate region
  std::uint64_t skipped_count = 0;    // support foreground vanished at feature scale
};

// One SGD step at the poly-decayed rate; increments the step counter.
// Throws when the schedule is already exhausted.
void sgd_poly_step(TrainState& state, const std::vector<double>& grads);

// Parameter-independent per-episode quantities: assembled decoder inputs and
// per-scale targets for both paths.
struct EpisodeBatch {
  DecoderInput main_input;
  std::vector<LabelMask> main_masks;  // one per decoder scale
  bool has_aux = false;
  DecoderInput aux_input;
  LabelMask aux_mask;
};

// Runs the frozen feature extraction, support fusion, prior construction and
// latent mining for one episode. Returns nullopt when every support loses its
// foreground under reduction to the feature grid (the episode is skipped).
std::optional<EpisodeBatch> prepare_episode(const Episode& episode,
                                            const Backbone& backbone,
                                            const LpsConfig& lps_cfg, Rng& lps_rng,
                                            double eps, bool mine_latent);

struct LossTerms {
  double l_main = 0.0, l_ce = 0.0, l_aux = 0.0;
  bool ce_fired = false;
};

// Forward-only evaluation of the three loss terms for the given parameters.
LossTerms episode_loss(const Decoder& decoder, const EpisodeBatch& batch);

// Forward plus reverse pass; accumulates the gradient of
// l_main + w.ce * l_ce + w.aux * l_aux into `grads`.
LossTerms episode_loss_grad(const Decoder& decoder, const EpisodeBatch& batch,
                            const LossWeights& w, std::vector<double>& grads);

struct LossReport {
  double lr = 0.0;
  double l_main = 0.0, l_ce = 0.0, l_aux = 0.0, total = 0.0;
  bool ce_fired = false;
  bool skipped = false;
};

// Full training step: prepare, loss, gradients, SGD update.
LossReport train_episode(TrainState& state, const Episode& episode,
                         const Backbone& backbone, Rng& lps_rng, double eps);

// Checkpoint file: magic "CELPCKPT", u32 version, u64 parameter count, flat
// little-endian f64 parameters, u64 step counter.
void save_checkpoint(const std::string& path, const Decoder& decoder, std::uint64_t step);
std::uint64_t load_checkpoint(const std::string& path, Decoder& decoder);

}  // namespace celp
