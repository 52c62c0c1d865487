#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "celp/tensor.hpp"

namespace celp {

// Effective run configuration. Loaded from a key=value file (with # comments)
// and/or command-line flags; the resolved configuration is echoed verbatim
// into every output directory so a run is reproducible from the echo alone.
struct RunConfig {
  std::uint64_t seed = 17;
  int fold = 0;
  std::size_t k = 1;
  std::uint64_t steps = 2000;
  double lr = 0.2;
  double delta = 0.65;
  std::size_t sigma = 0;  // 0 = auto: max(2, ceil(0.01 * hw)) on the feature grid
  double eps = 1e-7;
  double w_ce = 0.1;
  double w_aux = 1.0;
  std::size_t episodes = 200;  // per test class
  std::string fusion = "avg";
  std::string precision = "f32";
  std::string out = "celp_run";

  // Resolves sigma = 0 to the auto rule and checks every range; throws
  // ConfigError naming the offending field.
  void validate_and_resolve();

  Precision precision_mode() const;
  void echo(std::ostream& out_stream) const;
};

// Applies one key=value assignment; throws ConfigError on unknown keys or
// unparsable values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Reads a key=value file with # comments and blank lines.
void load_config_file(RunConfig& cfg, const std::string& path);

}  // namespace celp
