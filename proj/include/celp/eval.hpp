#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "celp/episodes.hpp"
#include "celp/lps.hpp"
#include "celp/mask.hpp"
#include "celp/model.hpp"

namespace celp {

// Integer tallies over evaluated episodes; mergeable, so sharded evaluation
// followed by merge() equals sequential accumulation exactly.
struct ConfusionAccumulator {
  struct ClassTally {
    std::uint64_t intersection = 0;
    std::uint64_t union_ = 0;
  };

  std::map<int, ClassTally> per_class;
  std::uint64_t fg_intersection = 0, fg_union = 0;
  std::uint64_t bg_intersection = 0, bg_union = 0;
  std::uint64_t episodes = 0;

  void merge(const ConfusionAccumulator& other);
};

// Adds one episode. Positions with gt = 255 are excluded from every tally;
// the class tallies treat 1 as the episode class, the FB tallies treat 1 as
// foreground and 0 as background.
void accumulate(ConfusionAccumulator& acc, const LabelMask& pred, const LabelMask& gt,
                int class_id);

// Mean over classes of pooled intersection / pooled union. Classes with zero
// union are excluded and reported through `excluded` when given.
double miou(const ConfusionAccumulator& acc, std::vector<int>* excluded = nullptr);

// Mean of pooled foreground IoU and pooled background IoU.
double fb_iou(const ConfusionAccumulator& acc);

struct Fusion {
  enum class Kind { Avg, Vote };
  Kind kind = Kind::Avg;
  std::size_t votes = 1;  // threshold for Kind::Vote

  static Fusion parse(const std::string& s);  // "avg", "v1".."v9"
  std::string str() const;
};

struct EvalOptions {
  int fold = 0;
  Phase phase = Phase::Test;
  std::size_t k = 1;
  Fusion fusion;
  std::size_t episodes_per_class = 200;
  std::uint64_t seed = 17;
  double eps = 1e-7;
  LpsConfig lps;
  bool per_episode_average = false;  // average per-episode IoUs instead of pooling
};

struct EvalClassResult {
  int class_id = 0;
  double iou = 0.0;
  std::uint64_t episodes = 0;
  std::uint64_t ce_skipped = 0;  // queries where mining found no candidate
};

struct EvalReport {
  ConfusionAccumulator acc;
  std::vector<EvalClassResult> classes;
  double miou_value = 0.0;
  double fb_iou_value = 0.0;
  std::uint64_t episodes = 0;
  std::uint64_t ce_skipped = 0;
  std::uint64_t support_skipped = 0;  // episodes dropped for empty support foreground
  std::vector<int> excluded_classes;
};

// Deterministic episodic evaluation of a trained decoder; never mutates
// parameters. The episode stream is fixed by (seed, fold, phase, K).
EvalReport evaluate(const Backbone& backbone, const Decoder& decoder,
                    const EvalOptions& opts);

// Binary argmax prediction of the full-grid head.
LabelMask predict_mask(const Decoder& decoder, const DecoderInput& input);

void write_metrics_csv(std::ostream& out, const EvalReport& report, int fold,
                       Phase phase, std::size_t k, const Fusion& fusion);

}  // namespace celp
