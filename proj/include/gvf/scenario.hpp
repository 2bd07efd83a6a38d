#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "gvf/observation.hpp"
#include "gvf/signal_model.hpp"

namespace gvf {

// Raised on malformed or out-of-range configuration input; the message names
// the offending key and the admissible values.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A fully resolved scenario: every field has its final value (defaults
// applied), so echoing this struct reconstructs the run exactly.
struct ScenarioConfig {
  std::string experiment;  // solve | filter | mc-error | riccati-compare |
                           // oracle-compare | uniqueness | innovation-qv
  double horizon = 1.0;
  int steps = 256;
  int modes = 8;
  std::string kernel = "fbm";  // fbm | brownian
  double hurst = 0.75;         // only meaningful for fbm
  std::string gains = "inv_k";  // identity | inv_k | linear_k | comma list
  std::string noise_kernel;     // "gaussian:<lengthscale>"; overrides gains
  std::vector<double> points = {0.3, 0.7};
  bool zero_observation = false;  // all-zero functionals instead of points
  std::uint64_t seed = 1;
  int mc_paths = 100;
  int refinements = 0;     // 0 = experiment default
  double tolerance = 0.0;  // 0 = experiment default
  std::string output_dir = "out";
  bool write_table = false;  // solve: also dump the full table (csv + binary)
  int workers = 1;           // Monte-Carlo worker pool size (1 = serial)
};

// Exit codes of the scenario runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailure = 1,
  kExitConfigError = 2,
  kExitRegularityFailure = 3,
};

// Parses the flat key = value format ('#' comments, blank lines ignored).
// Unknown or duplicate keys and malformed or out-of-range values raise
// ConfigError.
ScenarioConfig parse_scenario_config(const std::string& path);

// Same parser operating on in-memory text (used by tests).
ScenarioConfig parse_scenario_text(const std::string& text);

// Expands gain presets / the spatial noise kernel into a SignalModel.
SignalModel build_model(const ScenarioConfig& config);

// Point-evaluation channels, or one all-zero functional when
// zero_observation is set.
ObservationModel build_observation(const ScenarioConfig& config);

// Runs the configured experiment: writes manifest.txt, per-experiment CSV
// reports, and summary.txt into the output directory (GVF_OUTPUT_DIR
// overrides config.output_dir).  Diagnostic messages go to `log`.
int run_scenario(const std::string& config_path, std::ostream& log);

// Parses, validates, applies the regularity gate, and reports; no experiment
// is executed and nothing is written.
int validate_scenario(const std::string& config_path, std::ostream& log);

}  // namespace gvf
