#include "celp/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "celp/pgm.hpp"
#include "celp/tensor_io.hpp"

namespace celp {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDecoderHidden = 16;

void write_config_echo(const RunConfig& cfg, const fs::path& dir) {
  std::ofstream out(dir / "config.txt", std::ios::trunc);
  if (!out) throw FormatError("cannot write " + (dir / "config.txt").string());
  cfg.echo(out);
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_config_echo(cfg, dir);
  return dir;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

LpsConfig lps_from(const RunConfig& cfg) {
  LpsConfig lps;
  lps.delta = cfg.delta;
  lps.sigma = cfg.sigma;
  lps.seed = derive_stream(cfg.seed, "lps");
  return lps;
}

}  // namespace

Backbone make_backbone(std::uint64_t seed) {
  return Backbone(derive_stream(seed, "backbone"));
}

Decoder make_decoder(std::uint64_t seed) {
  return Decoder(2 * kMidChannels + 1, kDecoderHidden, derive_stream(seed, "decoder"));
}

TrainResult run_training(const RunConfig& raw_cfg) {
  RunConfig cfg = raw_cfg;
  cfg.validate_and_resolve();
  set_precision(cfg.precision_mode());

  TrainResult result{make_backbone(cfg.seed), TrainState{make_decoder(cfg.seed)}, {}};
  TrainState& state = result.state;
  state.base_lr = cfg.lr;
  state.total_steps = cfg.steps;
  state.weights = LossWeights{cfg.w_ce, cfg.w_aux};
  state.lps = lps_from(cfg);
  state.enable_ce = cfg.w_ce > 0.0;

  const FoldSplit split = fold_split(cfg.fold);
  Rng data_rng(derive_stream(cfg.seed, "train-data"));
  Rng lps_rng(derive_stream(cfg.seed, "train-lps"));

  result.rows.reserve(cfg.steps);
  for (std::uint64_t step = 0; step < cfg.steps; ++step) {
    LossReport report;
    // Degenerate episodes are skipped and replaced so every step trains.
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Episode episode = sample_episode(split, Phase::Train, 1, data_rng);
      report = train_episode(state, episode, result.backbone, lps_rng, cfg.eps);
      if (!report.skipped) break;
    }
    if (report.skipped) throw EmptyRegionError("train: could not sample a usable episode");
    result.rows.push_back(report);
  }
  return result;
}

int cmd_train(const RunConfig& raw_cfg) {
  RunConfig cfg = raw_cfg;
  cfg.validate_and_resolve();
  const fs::path dir = prepare_out_dir(cfg);

  const TrainResult result = run_training(cfg);

  std::ofstream loss_csv(dir / "loss.csv", std::ios::trunc);
  if (!loss_csv) throw FormatError("cannot write " + (dir / "loss.csv").string());
  loss_csv << "step,lr,L_main,L_ce,L_aux,total\n";
  for (std::size_t step = 0; step < result.rows.size(); ++step) {
    const LossReport& report = result.rows[step];
    loss_csv << step << "," << fmt(report.lr) << "," << fmt(report.l_main) << ","
             << fmt(report.l_ce) << "," << fmt(report.l_aux) << ","
             << fmt(report.total) << "\n";
  }

  save_checkpoint((dir / "model.ckpt").string(), result.state.decoder, result.state.step);
  std::cout << "train: fold " << cfg.fold << ", " << cfg.steps << " steps, "
            << result.state.ce_absent_count << " episodes without latent region, "
            << result.state.skipped_count << " skipped episodes\n"
            << "checkpoint: " << (dir / "model.ckpt").string() << "\n";
  return kExitOk;
}

EvalReport run_eval(const RunConfig& raw_cfg, const std::string& checkpoint_path) {
  RunConfig cfg = raw_cfg;
  cfg.validate_and_resolve();
  set_precision(cfg.precision_mode());

  const Backbone backbone = make_backbone(cfg.seed);
  Decoder decoder = make_decoder(cfg.seed);
  load_checkpoint(checkpoint_path, decoder);

  EvalOptions opts;
  opts.fold = cfg.fold;
  opts.phase = Phase::Test;
  opts.k = cfg.k;
  opts.fusion = Fusion::parse(cfg.fusion);
  opts.episodes_per_class = cfg.episodes;
  opts.seed = cfg.seed;
  opts.eps = cfg.eps;
  opts.lps = lps_from(cfg);
  return evaluate(backbone, decoder, opts);
}

int cmd_eval(const RunConfig& raw_cfg, const std::string& checkpoint_path) {
  RunConfig cfg = raw_cfg;
  cfg.validate_and_resolve();
  const fs::path dir = prepare_out_dir(cfg);

  const EvalReport report = run_eval(cfg, checkpoint_path);
  std::ofstream metrics(dir / "metrics.csv", std::ios::trunc);
  if (!metrics) throw FormatError("cannot write " + (dir / "metrics.csv").string());
  write_metrics_csv(metrics, report, cfg.fold, Phase::Test, cfg.k, Fusion::parse(cfg.fusion));

  for (const int cls : report.excluded_classes) {
    std::cerr << "warning: class " << cls << " has an empty union and was excluded\n";
  }
  std::cout << "eval: fold " << cfg.fold << " K=" << cfg.k << " fusion=" << cfg.fusion
            << " miou=" << report.miou_value << " fb_iou=" << report.fb_iou_value
            << " episodes=" << report.episodes << " ce_skipped=" << report.ce_skipped
            << "\n";
  return kExitOk;
}

int cmd_mine(const RunConfig& raw_cfg, const std::string& features_m_path,
             const std::string& features_h_path, const std::string& mask_path) {
  RunConfig cfg = raw_cfg;
  // The auto sigma rule resolves against the mined grid, not the toy grid.
  const bool sigma_auto = cfg.sigma == 0;
  cfg.sigma = sigma_auto ? 1 : cfg.sigma;
  cfg.validate_and_resolve();
  set_precision(cfg.precision_mode());

  const TensorFile fm_file = read_tensor_file(features_m_path);
  const TensorFile fh_file = read_tensor_file(features_h_path);
  const TensorFile mask_file = read_tensor_file(mask_path);
  if (fm_file.shape.size() != 3 || fh_file.shape.size() != 3) {
    throw FormatError("mine: feature tensors must have rank 3 (C x h x w)");
  }
  const std::size_t h = fm_file.shape[1], w = fm_file.shape[2];
  if (fh_file.shape[1] != h || fh_file.shape[2] != w) {
    throw DimensionError("mine: feature grids differ: " + std::to_string(h) + "x" +
                         std::to_string(w) + " vs " + std::to_string(fh_file.shape[1]) +
                         "x" + std::to_string(fh_file.shape[2]));
  }
  const LabelMask mask = to_mask(mask_file);
  if (mask.height != h || mask.width != w) {
    throw DimensionError("mine: mask grid does not match features");
  }
  FeatureMap f_m(fm_file.shape[0], h, w, to_tensor(fm_file));
  FeatureMap f_h(fh_file.shape[0], h, w, to_tensor(fh_file));

  if (sigma_auto) cfg.sigma = default_sigma(h * w);
  const fs::path dir = prepare_out_dir(cfg);

  LpsConfig lps = lps_from(cfg);
  Rng rng(lps.seed);
  const auto sample = sample_latent_prototype(f_m, f_h, mask, lps, rng);
  if (!sample) {
    std::cerr << "no latent region\n";
    return kExitNoLatentRegion;
  }

  write_mask_file((dir / "pseudo_mask.celp").string(), sample->pseudo_mask);
  write_tensor_file((dir / "prototype.celp").string(), sample->prototype.values, Dtype::f64);
  write_mask_pgm((dir / "preview.pgm").string(), sample->pseudo_mask);
  std::cout << "mine: center=" << sample->center_index
            << " candidates=" << sample->candidate_count
            << " foreground=" << sample->pseudo_mask.count(LabelMask::kForeground)
            << "\n";
  return kExitOk;
}

namespace {

struct SweepCell {
  double miou_1shot = 0, fbiou_1shot = 0;
  double miou_5shot = 0, fbiou_5shot = 0;
};

SweepCell run_sweep_cell(const RunConfig& cell_cfg) {
  if (cmd_train(cell_cfg) != kExitOk) {
    throw std::runtime_error("ablate: training failed for " + cell_cfg.out);
  }
  const std::string ckpt = (fs::path(cell_cfg.out) / "model.ckpt").string();
  SweepCell cell;
  RunConfig eval_cfg = cell_cfg;
  eval_cfg.k = 1;
  EvalReport one = run_eval(eval_cfg, ckpt);
  cell.miou_1shot = one.miou_value;
  cell.fbiou_1shot = one.fb_iou_value;
  eval_cfg.k = 5;
  EvalReport five = run_eval(eval_cfg, ckpt);
  cell.miou_5shot = five.miou_value;
  cell.fbiou_5shot = five.fb_iou_value;
  return cell;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

int cmd_ablate(const RunConfig& raw_cfg, const std::string& study) {
  RunConfig cfg = raw_cfg;
  cfg.validate_and_resolve();
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_config_echo(cfg, dir);

  if (study == "delta") {
    const double deltas[] = {0.40, 0.50, 0.65, 0.80};
    std::ofstream csv(dir / "ablate_delta.csv", std::ios::trunc);
    csv << "delta,miou_1shot,fbiou_1shot,miou_5shot,fbiou_5shot\n";
    for (const double d : deltas) {
      RunConfig cell_cfg = cfg;
      cell_cfg.delta = d;
      char name[32];
      std::snprintf(name, sizeof(name), "cell_delta_%.2f", d);
      cell_cfg.out = (dir / name).string();
      const SweepCell cell = run_sweep_cell(cell_cfg);
      char row[16];
      std::snprintf(row, sizeof(row), "%.2f", d);
      csv << row << "," << fmt6(cell.miou_1shot) << "," << fmt6(cell.fbiou_1shot) << ","
          << fmt6(cell.miou_5shot) << "," << fmt6(cell.fbiou_5shot) << "\n";
    }
    return kExitOk;
  }

  if (study == "weight") {
    const double weights[] = {0.00, 0.10, 0.25, 1.00};
    std::ofstream csv(dir / "ablate_weight.csv", std::ios::trunc);
    csv << "w_ce,miou_1shot,fbiou_1shot,miou_5shot,fbiou_5shot\n";
    for (const double w : weights) {
      RunConfig cell_cfg = cfg;
      cell_cfg.w_ce = w;
      char name[32];
      std::snprintf(name, sizeof(name), "cell_weight_%.2f", w);
      cell_cfg.out = (dir / name).string();
      const SweepCell cell = run_sweep_cell(cell_cfg);
      char row[16];
      std::snprintf(row, sizeof(row), "%.2f", w);
      csv << row << "," << fmt6(cell.miou_1shot) << "," << fmt6(cell.fbiou_1shot) << ","
          << fmt6(cell.miou_5shot) << "," << fmt6(cell.fbiou_5shot) << "\n";
    }
    return kExitOk;
  }

  if (study == "kshot") {
    RunConfig cell_cfg = cfg;
    cell_cfg.out = (dir / "cell_kshot").string();
    if (cmd_train(cell_cfg) != kExitOk) {
      throw std::runtime_error("ablate: training failed for " + cell_cfg.out);
    }
    const std::string ckpt = (fs::path(cell_cfg.out) / "model.ckpt").string();
    const char* fusions[] = {"avg", "v1", "v2", "v3", "v4", "v5"};
    std::vector<EvalReport> reports;
    for (const char* fusion : fusions) {
      RunConfig eval_cfg = cell_cfg;
      eval_cfg.k = 5;
      eval_cfg.fusion = fusion;
      reports.push_back(run_eval(eval_cfg, ckpt));
    }
    std::ofstream csv(dir / "ablate_kshot.csv", std::ios::trunc);
    csv << "metric,avg,v-1,v-2,v-3,v-4,v-5\n";
    csv << "miou";
    for (const EvalReport& r : reports) csv << "," << fmt6(r.miou_value);
    csv << "\nfb_iou";
    for (const EvalReport& r : reports) csv << "," << fmt6(r.fb_iou_value);
    csv << "\n";
    return kExitOk;
  }

  throw ConfigError("study: expected delta, weight or kshot, got '" + study + "'");
}

namespace {

struct CellKey {
  std::string fold, phase, k, fusion, class_id;
  bool operator<(const CellKey& o) const {
    return std::tie(fold, phase, k, fusion, class_id) <
           std::tie(o.fold, o.phase, o.k, o.fusion, o.class_id);
  }
  std::string str() const {
    return "fold=" + fold + " phase=" + phase + " K=" + k + " fusion=" + fusion +
           " class=" + class_id;
  }
};

struct CellStats {
  std::vector<double> iou, miou, fbiou;
  std::vector<std::string> dirs;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report: at least one run directory required");
  fs::create_directories(out_dir);
  {
    std::ofstream echo(fs::path(out_dir) / "inputs.txt", std::ios::trunc);
    echo << "out=" << out_dir << "\n";
    for (const std::string& dir : run_dirs) echo << "dir=" << dir << "\n";
  }

  std::map<CellKey, CellStats> cells;
  std::vector<std::string> malformed;
  std::size_t parsed_dirs = 0;

  for (const std::string& dir : run_dirs) {
    const fs::path metrics_path = fs::path(dir) / "metrics.csv";
    std::ifstream in(metrics_path);
    if (!in) {
      malformed.push_back(dir + ": missing metrics.csv");
      continue;
    }
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line).size() != 10) {
      malformed.push_back(dir + ": bad metrics.csv header");
      continue;
    }
    bool ok = true;
    std::vector<std::pair<CellKey, std::array<double, 3>>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::vector<std::string> f = split_csv_line(line);
      if (f.size() != 10) {
        ok = false;
        break;
      }
      try {
        rows.push_back({CellKey{f[0], f[1], f[2], f[3], f[4]},
                        {std::stod(f[5]), std::stod(f[6]), std::stod(f[7])}});
      } catch (const std::exception&) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      malformed.push_back(dir + ": unparsable metrics row");
      continue;
    }
    ++parsed_dirs;
    for (auto& [key, vals] : rows) {
      CellStats& stats = cells[key];
      stats.iou.push_back(vals[0]);
      stats.miou.push_back(vals[1]);
      stats.fbiou.push_back(vals[2]);
      stats.dirs.push_back(dir);
    }
  }
  if (parsed_dirs == 0) throw FormatError("report: no readable run directory");

  std::ofstream csv(fs::path(out_dir) / "consolidated.csv", std::ios::trunc);
  csv << "fold,phase,K,fusion,class_id,runs,iou_mean,iou_std,miou_mean,miou_std,"
         "fbiou_mean,fbiou_std\n";
  std::ofstream summary(fs::path(out_dir) / "summary.txt", std::ios::trunc);
  summary << "runs merged: " << parsed_dirs << " of " << run_dirs.size() << "\n";
  for (const std::string& bad : malformed) summary << "malformed: " << bad << "\n";

  for (const auto& [key, stats] : cells) {
    csv << key.fold << "," << key.phase << "," << key.k << "," << key.fusion << ","
        << key.class_id << "," << stats.iou.size() << "," << fmt6(mean_of(stats.iou))
        << "," << fmt6(stddev_of(stats.iou)) << "," << fmt6(mean_of(stats.miou)) << ","
        << fmt6(stddev_of(stats.miou)) << "," << fmt6(mean_of(stats.fbiou)) << ","
        << fmt6(stddev_of(stats.fbiou)) << "\n";
    summary << key.str() << ": iou " << fmt6(mean_of(stats.iou)) << " +- "
            << fmt6(stddev_of(stats.iou)) << " over " << stats.iou.size() << " run(s)";
    if (stats.iou.size() != parsed_dirs) {
      summary << "  [MISSING in " << (parsed_dirs - stats.iou.size()) << " run(s)]";
    }
    summary << "\n";
  }
  std::cout << "report: " << cells.size() << " cells from " << parsed_dirs
            << " run(s); " << malformed.size() << " malformed input(s)\n";
  return kExitOk;
}

}  // namespace celp
