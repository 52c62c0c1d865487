// Command-line driver for the few-shot segmentation testbed: episodic
// training, evaluation, standalone latent-region mining, ablation sweeps and
// report consolidation.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "celp/commands.hpp"

namespace {

struct RunFlags {
  CLI::Option* config = nullptr;
  std::string config_path;
  celp::RunConfig flag_values;
  CLI::Option* seed = nullptr;
  CLI::Option* fold = nullptr;
  CLI::Option* k = nullptr;
  CLI::Option* steps = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* delta = nullptr;
  CLI::Option* sigma = nullptr;
  CLI::Option* eps = nullptr;
  CLI::Option* w_ce = nullptr;
  CLI::Option* w_aux = nullptr;
  CLI::Option* episodes = nullptr;
  CLI::Option* fusion = nullptr;
  CLI::Option* precision = nullptr;
  CLI::Option* out = nullptr;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  const celp::RunConfig defaults;
  flags.config = cmd->add_option("--config", flags.config_path,
                                 "key=value config file; flags override its entries");
  flags.seed = cmd->add_option("--seed", flags.flag_values.seed,
                               "master seed (default " + std::to_string(defaults.seed) + ")");
  flags.fold = cmd->add_option("--fold", flags.flag_values.fold, "fold index in {0..3}");
  flags.k = cmd->add_option("--k", flags.flag_values.k, "supports per episode");
  flags.steps = cmd->add_option("--steps", flags.flag_values.steps, "training steps");
  flags.lr = cmd->add_option("--lr", flags.flag_values.lr, "base learning rate");
  flags.delta = cmd->add_option("--delta", flags.flag_values.delta,
                                "similarity threshold in (0,1]");
  flags.sigma = cmd->add_option("--sigma", flags.flag_values.sigma,
                                "candidate count threshold; 0 = auto");
  flags.eps = cmd->add_option("--eps", flags.flag_values.eps,
                              "normalization stability constant");
  flags.w_ce = cmd->add_option("--w-ce", flags.flag_values.w_ce,
                               "weight of the auxiliary contrastive term");
  flags.w_aux = cmd->add_option("--w-aux", flags.flag_values.w_aux,
                                "weight of the multi-scale decoder term");
  flags.episodes = cmd->add_option("--episodes", flags.flag_values.episodes,
                                   "evaluation episodes per test class");
  flags.fusion = cmd->add_option("--fusion", flags.flag_values.fusion,
                                 "K-shot fusion: avg or v1..v5");
  flags.precision = cmd->add_option("--precision", flags.flag_values.precision,
                                    "storage precision: f32 or f64");
  flags.out = cmd->add_option("--out", flags.flag_values.out, "output directory");
}

celp::RunConfig resolve_config(const RunFlags& flags) {
  celp::RunConfig cfg;
  if (flags.config->count() > 0) celp::load_config_file(cfg, flags.config_path);
  if (flags.seed->count() > 0) cfg.seed = flags.flag_values.seed;
  if (flags.fold->count() > 0) cfg.fold = flags.flag_values.fold;
  if (flags.k->count() > 0) cfg.k = flags.flag_values.k;
  if (flags.steps->count() > 0) cfg.steps = flags.flag_values.steps;
  if (flags.lr->count() > 0) cfg.lr = flags.flag_values.lr;
  if (flags.delta->count() > 0) cfg.delta = flags.flag_values.delta;
  if (flags.sigma->count() > 0) cfg.sigma = flags.flag_values.sigma;
  if (flags.eps->count() > 0) cfg.eps = flags.flag_values.eps;
  if (flags.w_ce->count() > 0) cfg.w_ce = flags.flag_values.w_ce;
  if (flags.w_aux->count() > 0) cfg.w_aux = flags.flag_values.w_aux;
  if (flags.episodes->count() > 0) cfg.episodes = flags.flag_values.episodes;
  if (flags.fusion->count() > 0) cfg.fusion = flags.flag_values.fusion;
  if (flags.precision->count() > 0) cfg.precision = flags.flag_values.precision;
  if (flags.out->count() > 0) cfg.out = flags.flag_values.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot segmentation testbed with latent-prototype mining"};
  app.require_subcommand(1);

  RunFlags train_flags, eval_flags, mine_flags, ablate_flags;

  CLI::App* train = app.add_subcommand("train", "episodic training on a fold");
  add_run_flags(train, train_flags);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_run_flags(eval, eval_flags);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint path")->required();

  CLI::App* mine = app.add_subcommand("mine", "mine a latent region from tensor files");
  add_run_flags(mine, mine_flags);
  std::string features_m, features_h, mask_path;
  mine->add_option("--features-m", features_m, "mid-level feature tensor file")->required();
  mine->add_option("--features-h", features_h, "high-level feature tensor file")->required();
  mine->add_option("--mask", mask_path, "u8 mask tensor file")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "hyperparameter sweep");
  add_run_flags(ablate, ablate_flags);
  std::string study;
  ablate->add_option("--study", study, "delta, weight or kshot")->required();

  CLI::App* report = app.add_subcommand("report", "consolidate run metrics");
  std::vector<std::string> run_dirs;
  std::string report_out = "celp_report";
  report->add_option("dirs", run_dirs, "completed run directories")->required();
  report->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : celp::kExitConfigError;
  }

  try {
    if (train->parsed()) return celp::cmd_train(resolve_config(train_flags));
    if (eval->parsed()) return celp::cmd_eval(resolve_config(eval_flags), checkpoint);
    if (mine->parsed()) {
      return celp::cmd_mine(resolve_config(mine_flags), features_m, features_h, mask_path);
    }
    if (ablate->parsed()) return celp::cmd_ablate(resolve_config(ablate_flags), study);
    if (report->parsed()) return celp::cmd_report(run_dirs, report_out);
  } catch (const celp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return celp::kExitConfigError;
  } catch (const celp::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return celp::kExitFormatError;
  } catch (const celp::DimensionError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return celp::kExitFormatError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return celp::kExitFailure;
  }
  return celp::kExitFailure;
}
