#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twinbeam/analysis.hpp"
#include "twinbeam/analytic.hpp"
#include "twinbeam/model.hpp"

namespace twinbeam {

struct Tolerances {
  double symplectic = 1e-9;
  double reconstruction = 1e-8;
  double pair_degeneracy = 1e-8;
  double factor = 1e-9;         ///< orthogonality and symplecticity of O, Õ
  double photon_balance = 1e-8; ///< relative ⟨N_S⟩ vs ⟨N_I⟩
  double tune = 1e-6;           ///< absolute photon-number tolerance for gain tuning
  double route_r = 1e-8;
  double route_overlap = 1e-8;
  double determinant = 1e-8;
};

struct PolingConfig {
  enum class Kind { unpoled, qpm, apodized, file } kind = Kind::unpoled;
  double period = 0.0;
  double domain_width = 0.0;
  std::optional<double> pmf_width;  ///< default: matched to the signal walk-off |κ_S|σ
  double carrier = 0.0;
  std::string path;
};

struct SweepConfig {
  int points = 21;
  std::optional<std::pair<double, double>> ns_range;
  std::optional<std::pair<double, double>> scale_range;
};

struct RunConfig {
  int N = 101;
  double center = 0.0;
  std::optional<double> half_width;

  double sigma = 1.0;
  std::optional<double> g0;
  std::optional<double> target_NS;
  Envelope envelope = Envelope::gaussian;
  std::vector<double> table_offsets, table_values;
  bool table_symmetric = true;

  MediumSpec medium;
  PolingConfig poling;

  bool double_pass = false;
  double gain2_scale = 1.0;

  bool remove_free_phase = true;
  Tolerances tol;
  std::string output_dir = ".";
  std::optional<Regime> assert_regime;
  bool save_propagator = false;
  std::string propagator_file;
  bool force_full = false;
  bool qpm_fast_path = false;
  SweepConfig sweep;

  std::string base_dir;  ///< directory of the config file, for relative paths
};

/// Strict parse: unknown keys and wrong types raise ConfigError.
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Resolves a path relative to the config file directory.
std::string resolve_path(const RunConfig& cfg, const std::string& path);

Poling build_poling(const RunConfig& cfg);

/// Grid, pump (with g0 if given, else 0), medium and poling for the configuration.
Setup make_setup(const RunConfig& cfg);

/// g0 from the config, or tuned so that ⟨N_S⟩ reaches target_NS (equal passes for double).
double resolve_g0(const RunConfig& cfg, const Setup& setup);

}  // namespace twinbeam
