#include "celp/eval.hpp"

#include <cstdio>
#include <ostream>

namespace celp {

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  for (const auto& [cls, tally] : other.per_class) {
    ClassTally& mine = per_class[cls];
    mine.intersection += tally.intersection;
    mine.union_ += tally.union_;
  }
  fg_intersection += other.fg_intersection;
  fg_union += other.fg_union;
  bg_intersection += other.bg_intersection;
  bg_union += other.bg_union;
  episodes += other.episodes;
}

void accumulate(ConfusionAccumulator& acc, const LabelMask& pred, const LabelMask& gt,
                int class_id) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw DimensionError("accumulate: prediction and ground-truth grids differ");
  }
  ConfusionAccumulator::ClassTally& tally = acc.per_class[class_id];
  for (std::size_t p = 0; p < gt.positions(); ++p) {
    const std::uint8_t g = gt.at_pos(p);
    if (g == LabelMask::kIgnore) continue;
    const bool gt_fg = g == LabelMask::kForeground;
    const bool pr_fg = pred.at_pos(p) == LabelMask::kForeground;
    if (gt_fg && pr_fg) ++tally.intersection;
    if (gt_fg || pr_fg) ++tally.union_;
    if (gt_fg && pr_fg) ++acc.fg_intersection;
    if (gt_fg || pr_fg) ++acc.fg_union;
    if (!gt_fg && !pr_fg) ++acc.bg_intersection;
    if (!gt_fg || !pr_fg) ++acc.bg_union;
  }
  ++acc.episodes;
}

double miou(const ConfusionAccumulator& acc, std::vector<int>* excluded) {
  if (acc.per_class.empty()) throw EmptyRegionError("miou: empty accumulator");
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& [cls, tally] : acc.per_class) {
    if (tally.union_ == 0) {
      if (excluded != nullptr) excluded->push_back(cls);
      continue;
    }
    sum += static_cast<double>(tally.intersection) / static_cast<double>(tally.union_);
    ++counted;
  }
  if (counted == 0) throw EmptyRegionError("miou: every class has an empty union");
  return sum / static_cast<double>(counted);
}

double fb_iou(const ConfusionAccumulator& acc) {
  if (acc.episodes == 0) throw EmptyRegionError("fb_iou: empty accumulator");
  const double fg = acc.fg_union == 0
                        ? 1.0
                        : static_cast<double>(acc.fg_intersection) /
                              static_cast<double>(acc.fg_union);
  const double bg = acc.bg_union == 0
                        ? 1.0
                        : static_cast<double>(acc.bg_intersection) /
                              static_cast<double>(acc.bg_union);
  return 0.5 * (fg + bg);
}

Fusion Fusion::parse(const std::string& s) {
  if (s == "avg") return Fusion{Kind::Avg, 1};
  if (s.size() >= 2 && s[0] == 'v') {
    // accept both "v3" and "v-3"
    const std::string digits = s[1] == '-' ? s.substr(2) : s.substr(1);
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
      const std::size_t votes = std::stoul(digits);
      if (votes >= 1 && votes <= 9) return Fusion{Kind::Vote, votes};
    }
  }
  throw ConfigError("fusion: expected avg or v1..v9, got '" + s + "'");
}

std::string Fusion::str() const {
  if (kind == Kind::Avg) return "avg";
  return "v" + std::to_string(votes);
}

LabelMask predict_mask(const Decoder& decoder, const DecoderInput& input) {
  const std::vector<ProbabilityMap> preds = decoder.forward(input);
  const ProbabilityMap& p = preds[0];
  LabelMask mask(p.height, p.width);
  for (std::size_t i = 0; i < p.positions(); ++i) {
    if (p.prob(1, i) > p.prob(0, i)) mask.labels[i] = LabelMask::kForeground;
  }
  return mask;
}

EvalReport evaluate(const Backbone& backbone, const Decoder& decoder,
                    const EvalOptions& opts) {
  if (opts.fusion.kind == Fusion::Kind::Vote && opts.fusion.votes > opts.k) {
    throw ConfigError("fusion: vote threshold exceeds K");
  }
  const FoldSplit split = fold_split(opts.fold);
  const std::vector<int>& classes =
      opts.phase == Phase::Train ? split.train_classes : split.test_classes;

  Rng data_rng(derive_stream(opts.seed, "eval-data"));
  Rng lps_rng(derive_stream(opts.seed, "eval-lps"));

  EvalReport report;
  std::map<int, double> per_episode_iou_sum;

  for (const int cls : classes) {
    EvalClassResult result;
    result.class_id = cls;
    for (std::size_t e = 0; e < opts.episodes_per_class; ++e) {
      const Episode episode = sample_episode_of(cls, opts.k, data_rng);
      const auto [f_q_m, f_q_h] = backbone.extract(episode.query.image);
      const LabelMask gt = downsample_nearest(episode.query.mask, f_q_m.height, f_q_m.width);

      std::vector<Prototype> protos;
      std::vector<PriorMask> priors;
      bool degenerate = false;
      for (const SamplePair& support : episode.supports) {
        const auto [f_s_m, f_s_h] = backbone.extract(support.image);
        const LabelMask m_s = downsample_nearest(support.mask, f_s_m.height, f_s_m.width);
        if (m_s.count(LabelMask::kForeground) == 0) {
          degenerate = true;
          break;
        }
        protos.push_back(masked_gap(f_s_m, m_s, LabelMask::kForeground));
        priors.push_back(support_prior_mask(f_q_h, f_s_h, m_s, opts.eps));
      }
      if (degenerate) {
        ++report.support_skipped;
        continue;
      }

      LabelMask pred;
      if (opts.fusion.kind == Fusion::Kind::Avg) {
        auto [proto, prior] = kshot_average(protos, priors);
        pred = predict_mask(decoder, assemble_decoder_input(f_q_m, proto, prior));
      } else {
        std::vector<LabelMask> votes;
        votes.reserve(protos.size());
        for (std::size_t i = 0; i < protos.size(); ++i) {
          votes.push_back(
              predict_mask(decoder, assemble_decoder_input(f_q_m, protos[i], priors[i])));
        }
        pred = kshot_vote(votes, opts.fusion.votes);
      }

      if (!sample_latent_prototype(f_q_m, f_q_h, gt, opts.lps, lps_rng)) {
        ++result.ce_skipped;
      }

      accumulate(report.acc, pred, gt, cls);
      ++result.episodes;
      if (opts.per_episode_average) {
        std::uint64_t inter = 0, uni = 0;
        for (std::size_t p = 0; p < gt.positions(); ++p) {
          if (gt.at_pos(p) == LabelMask::kIgnore) continue;
          const bool g = gt.at_pos(p) == LabelMask::kForeground;
          const bool q = pred.at_pos(p) == LabelMask::kForeground;
          if (g && q) ++inter;
          if (g || q) ++uni;
        }
        per_episode_iou_sum[cls] +=
            uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
      }
    }
    report.ce_skipped += result.ce_skipped;
    report.episodes += result.episodes;
    report.classes.push_back(result);
  }

  for (EvalClassResult& result : report.classes) {
    const auto it = report.acc.per_class.find(result.class_id);
    if (it != report.acc.per_class.end() && it->second.union_ > 0) {
      result.iou = static_cast<double>(it->second.intersection) /
                   static_cast<double>(it->second.union_);
    }
  }

  if (opts.per_episode_average) {
    double sum = 0.0;
    std::size_t counted = 0;
    for (const EvalClassResult& result : report.classes) {
      if (result.episodes == 0) continue;
      sum += per_episode_iou_sum[result.class_id] / static_cast<double>(result.episodes);
      ++counted;
    }
    if (counted == 0) throw EmptyRegionError("evaluate: no episodes were evaluated");
    report.miou_value = sum / static_cast<double>(counted);
  } else {
    report.miou_value = miou(report.acc, &report.excluded_classes);
  }
  report.fb_iou_value = fb_iou(report.acc);
  return report;
}

void write_metrics_csv(std::ostream& out, const EvalReport& report, int fold,
                       Phase phase, std::size_t k, const Fusion& fusion) {
  out << "fold,phase,K,fusion,class_id,iou,miou,fb_iou,episodes,ce_skipped\n";
  char buf[160];
  for (const EvalClassResult& result : report.classes) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%zu,%s,%d,%.6f,%.6f,%.6f,%llu,%llu\n", fold,
                  phase == Phase::Train ? "train" : "test", k, fusion.str().c_str(),
                  result.class_id, result.iou, report.miou_value, report.fb_iou_value,
                  static_cast<unsigned long long>(result.episodes),
                  static_cast<unsigned long long>(result.ce_skipped));
    out << buf;
  }
}

}  // namespace celp
