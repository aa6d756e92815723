#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "twinbeam/blochmessiah.hpp"
#include "twinbeam/model.hpp"
#include "twinbeam/propagator.hpp"

namespace twinbeam {

/// |Σ_n v_n u_n*|² between unit-normalized vectors.
double mode_fidelity(const CVector& u, const CVector& v);
/// Same, requiring matching grid size and beam.
double mode_fidelity(const SchmidtMode& u, const SchmidtMode& v);

/// Fidelity of u_in against the bin-reversed output mode.
double flip_overlap(const CVector& u_in, const CVector& u_out);
double flip_overlap(const SchmidtMode& u_in, const SchmidtMode& u_out);

/// Everything needed to build and decompose one configuration.
struct Setup {
  FrequencyGrid grid;
  PumpSpec pump;
  MediumSpec medium;
  Poling poling;
  bool remove_free_phase = true;
  ComposeOptions compose;
  BmOptions bm;
};

Propagator single_pass_propagator(const Setup& s, double g0);
Propagator double_pass_propagator(const Setup& s, double g0, double gain2);

/// Generic decomposition with modes attached; removes the free phase first when requested.
BlochMessiahResult decompose(const Propagator& p, bool remove_free_phase, const BmOptions& bm = {});

struct SweepPoint {
  double gain2_scale = 1.0;
  double mean_NS = 0.0;
  double fidelity_k1 = 0.0;
  Vector r;
};

struct SweepResult {
  double g0 = 0.0;  ///< first-pass gain giving the base photon number with equal passes
  std::vector<SweepPoint> points;
};

struct SweepOptions {
  int points = 21;
  std::optional<std::pair<double, double>> scale_range;  ///< explicit gain2 scales
  std::optional<std::pair<double, double>> ns_range;     ///< default: base × (0.5, 1.5)
  double tune_tol = 1e-6;
  int jobs = 1;
};

SweepResult gain_variation_sweep(const Setup& setup, double base_target_NS,
                                 const SweepOptions& opts = {});

void write_sweep_csv(std::ostream& os, const SweepResult& r);

/**
 * Row k (0-based) of U e^{iΦ} Uᴴ: amplitudes of a mode-k seed on every output mode
 * after the phases Φ = diag(φ).
 */
CVector inline_mismatch(const CMatrix& U, const Vector& phases, int k);

/// Overlaps ⟨u_out_k, u_in_l⟩ between output and input Schmidt modes of one beam.
CMatrix alignment_unitary(const BlochMessiahResult& result, Beam beam);

struct JsaOracle {
  CMatrix jsa;               ///< rows signal bins, columns idler bins
  Vector schmidt_coeffs;     ///< descending, Σ c² = 1
  CMatrix signal_modes;      ///< columns
  CMatrix idler_modes;       ///< columns
};

/// Low-gain joint spectral amplitude (pump × PMF) and its Schmidt decomposition.
JsaOracle lowgain_jsa_oracle(const FrequencyGrid& grid, const PumpSpec& pump,
                             const MediumSpec& medium, const Poling& poling);

void write_jsa_csv(std::ostream& os, const JsaOracle& o);
void write_schmidt_csv(std::ostream& os, const JsaOracle& o);

}  // namespace twinbeam
