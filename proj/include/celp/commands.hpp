#pragma once

#include <string>
#include <vector>

#include "celp/config.hpp"
#include "celp/eval.hpp"
#include "celp/model.hpp"

namespace celp {

enum ExitCode {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfigError = 2,
  kExitFormatError = 3,
  kExitNoLatentRegion = 4,
};

// Builders shared by every command so a seed always maps to the same model.
Backbone make_backbone(std::uint64_t seed);
Decoder make_decoder(std::uint64_t seed);

struct TrainResult {
  Backbone backbone;
  TrainState state;
  std::vector<LossReport> rows;  // one per step
};

// Full training loop (1-shot episodes on the fold's train classes) without
// any file output.
TrainResult run_training(const RunConfig& cfg);

// Trains on the fold's train classes (1-shot episodes) and writes config.txt,
// loss.csv (one row per step), and model.ckpt into cfg.out.
int cmd_train(const RunConfig& cfg);

// Library-level evaluation of a checkpoint under cfg; used by cmd_eval and
// the ablation sweeps.
EvalReport run_eval(const RunConfig& cfg, const std::string& checkpoint_path);

// Writes config.txt and metrics.csv into cfg.out.
int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path);

// Standalone mining over tensor files; writes pseudo_mask.celp,
// prototype.celp and preview.pgm. Returns kExitNoLatentRegion when the
// candidate set is empty.
int cmd_mine(const RunConfig& cfg, const std::string& features_m_path,
             const std::string& features_h_path, const std::string& mask_path);

// study is one of delta | weight | kshot; trains/evaluates each sweep cell
// under cfg.out/cell_* and writes ablate_<study>.csv shaped like the
// corresponding results table.
int cmd_ablate(const RunConfig& cfg, const std::string& study);

// Merges metrics.csv files from completed run directories; writes
// consolidated.csv and summary.txt into out_dir.
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace celp
