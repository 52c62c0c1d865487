#include "celp/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "celp/eval.hpp"
#include "celp/geometry.hpp"
#include "celp/lps.hpp"

namespace celp {

namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a real number, got '" + value + "'");
  }
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::validate_and_resolve() {
  if (fold < 0 || fold >= kNumFolds) {
    throw ConfigError("fold: must lie in [0, 4), got " + std::to_string(fold));
  }
  if (k < 1) throw ConfigError("k: must be >= 1");
  if (steps < 1) throw ConfigError("steps: must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr: must be positive");
  if (!(delta > 0.0) || delta > 1.0) {
    throw ConfigError("delta: must lie in (0, 1], got " + std::to_string(delta));
  }
  if (sigma == 0) sigma = default_sigma(kFeatureSize * kFeatureSize);
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps: must be positive");
  if (!(w_ce >= 0.0) || !std::isfinite(w_ce)) throw ConfigError("w_ce: must be >= 0");
  if (!(w_aux >= 0.0) || !std::isfinite(w_aux)) throw ConfigError("w_aux: must be >= 0");
  if (episodes < 1) throw ConfigError("episodes: must be >= 1");
  Fusion::parse(fusion);  // throws on bad spelling
  if (precision != "f32" && precision != "f64") {
    throw ConfigError("precision: expected f32 or f64, got '" + precision + "'");
  }
  if (out.empty()) throw ConfigError("out: must not be empty");
}

Precision RunConfig::precision_mode() const {
  return precision == "f32" ? Precision::f32 : Precision::f64;
}

void RunConfig::echo(std::ostream& out_stream) const {
  char buf[64];
  out_stream << "seed=" << seed << "\n";
  out_stream << "fold=" << fold << "\n";
  out_stream << "k=" << k << "\n";
  out_stream << "steps=" << steps << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", lr);
  out_stream << "lr=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", delta);
  out_stream << "delta=" << buf << "\n";
  out_stream << "sigma=" << sigma << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", eps);
  out_stream << "eps=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", w_ce);
  out_stream << "w_ce=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", w_aux);
  out_stream << "w_aux=" << buf << "\n";
  out_stream << "episodes=" << episodes << "\n";
  out_stream << "fusion=" << fusion << "\n";
  out_stream << "precision=" << precision << "\n";
  out_stream << "out=" << out << "\n";
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "fold") cfg.fold = static_cast<int>(parse_u64(key, value));
  else if (key == "k") cfg.k = parse_u64(key, value);
  else if (key == "steps") cfg.steps = parse_u64(key, value);
  else if (key == "lr") cfg.lr = parse_double(key, value);
  else if (key == "delta") cfg.delta = parse_double(key, value);
  else if (key == "sigma") cfg.sigma = parse_u64(key, value);
  else if (key == "eps") cfg.eps = parse_double(key, value);
  else if (key == "w_ce") cfg.w_ce = parse_double(key, value);
  else if (key == "w_aux") cfg.w_aux = parse_double(key, value);
  else if (key == "episodes") cfg.episodes = parse_u64(key, value);
  else if (key == "fusion") cfg.fusion = value;
  else if (key == "precision") cfg.precision = value;
  else if (key == "out") cfg.out = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not a key=value assignment");
    }
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace celp
