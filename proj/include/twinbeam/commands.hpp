#pragma once

#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "twinbeam/analysis.hpp"
#include "twinbeam/config.hpp"

namespace twinbeam {

struct CommandContext {
  std::optional<std::string> out_dir;  ///< overrides options.output_dir
  int jobs = 1;
  std::ostream* log = nullptr;         ///< progress and result lines; silent when null
};

/// Output directory (created if missing).
std::string prepare_output_dir(const RunConfig& cfg, const CommandContext& ctx);

/// Throws RegimeError when the asserted block structure does not hold.
void enforce_regime(const RunConfig& cfg, const Setup& setup);

/**
 * Propagator, decomposition and photon numbers. Writes summary.json, modes.csv,
 * modes.svg and optionally propagator.txt. Residuals above tolerance raise
 * ContractViolation after the files are written.
 */
nlohmann::json cmd_simulate(const RunConfig& cfg, const CommandContext& ctx);

/// Second-pass gain sweep; writes sweep.csv and sweep.svg. Needs a double-pass config.
SweepResult cmd_sweep_gain(const RunConfig& cfg, const CommandContext& ctx);

/**
 * Evaluates every invariant on the configured system and writes verify.json.
 * Raises ContractViolation naming the failed hard checks.
 */
nlohmann::json cmd_verify(const RunConfig& cfg, const CommandContext& ctx);

/// Poling description given on the command line instead of a config.
struct PolingArgs {
  std::string kind;  ///< unpoled | qpm | apodized | file
  double length = 0.0;
  double period = 0.0;
  double domain_width = 0.0;
  double pmf_width = 0.0;
  double carrier = 0.0;
  std::string path;
};

struct PmfEvalArgs {
  std::optional<double> dk_min, dk_max;
  int points = 401;
};

/// Builds a poling and its Gaussian target parameters from command-line arguments.
RunConfig poling_config(const PolingArgs& args);

/// Writes poling.txt; returns its path.
std::string cmd_poling_gen(const RunConfig& cfg, const CommandContext& ctx);

/**
 * Writes pmf.csv (dk, abs, re, im and, for apodized poling, the Gaussian target)
 * and pmf_summary.json. Returns the relative L² error to the target, or NaN when
 * there is none.
 */
double cmd_poling_eval(const RunConfig& cfg, const PmfEvalArgs& args, const CommandContext& ctx);

}  // namespace twinbeam
