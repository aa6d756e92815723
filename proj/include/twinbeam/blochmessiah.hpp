#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "twinbeam/model.hpp"

namespace twinbeam {

enum class Beam { signal, idler };
enum class Direction { input, output };

const char* to_string(Beam b);
const char* to_string(Direction d);

/// Normalized complex amplitude vector on the frequency grid.
struct SchmidtMode {
  CVector amplitudes;
  Beam beam = Beam::signal;
  Direction direction = Direction::output;
  int k = 0;             ///< squeezer index, 0-based, descending r
  double r = 0.0;
  bool passive = false;  ///< r clamped to zero
  bool mixed = false;    ///< support split across both beam blocks beyond 1e-6
  double minority_weight = 0.0;
};

struct BmOptions {
  double r_tol = 1e-12;            ///< r below this is clamped to zero (passive)
  double pairing_tol = 1e-6;       ///< relative tolerance for adjacent pair degeneracy
  double input_symplectic_tol = 1e-6;
  double mixed_tol = 1e-6;
};

/**
 * Bloch-Messiah factors S = O Λ Õᵀ.
 *
 * Column j and 2N+j of O (and Õ) form complex mode j; Λ = diag(λ, 1/λ) with
 * λ descending and adjacent entries paired. After `bloch_messiah` the pair
 * orientation is fixed so that the rearranged column 2k is idler-like and
 * 2k+1 signal-like.
 */
struct BlochMessiahResult {
  Eigen::Index N = 0;
  Matrix O, O_tilde;
  Vector lambdas;  ///< 4N entries
  Vector r;        ///< N squeezing parameters, descending
  std::vector<SchmidtMode> modes_in, modes_out;  ///< per k: signal then idler

  const SchmidtMode& mode(Direction d, int k, Beam b) const;
};

BlochMessiahResult bloch_messiah(const Matrix& S, const BmOptions& opts = {});

/**
 * Puts raw factors into the standard form used by `bloch_messiah`:
 * positive λ ≥ 1 in the first half, descending, pair orientation fixed.
 * `signed_lambdas` may hold negative or sub-unit entries with the reciprocal in
 * position 2N+j.
 */
BlochMessiahResult standard_form(Matrix O, Vector signed_lambdas, Matrix O_tilde,
                                 const BmOptions& opts = {});

/// Complex matrix ⊕ w with w = (1/√2)[[1, i], [i, 1]], size 2N.
CMatrix beam_splitter_network(Eigen::Index two_n);
/// Real symplectic embedding W of the beam-splitter network (4N×4N).
Matrix w_matrix(Eigen::Index two_n);

struct Rearranged {
  Matrix OW, OtW;
  Matrix lambda_tms;  ///< Wᵀ Λ W
};

Rearranged two_mode_rearrange(const BlochMessiahResult& result, const BmOptions& opts = {});

/// Complex unitary encoded in an orthogonal-symplectic factor.
CMatrix factor_unitary(const Matrix& factor);

/**
 * Splits the columns of a rearranged factor into signal/idler modes.
 * Column 2k is reported as the idler and 2k+1 as the signal of squeezer k unless
 * the block weights say otherwise. Output is ordered k ascending, signal first.
 */
std::vector<SchmidtMode> extract_modes(const Matrix& rearranged, Direction direction,
                                       const Vector& r, const BmOptions& opts = {});

/// Global phase making the center bin (or the largest bin) real and nonnegative.
CVector gauge_fix(const CVector& u);
void gauge_fix(std::vector<SchmidtMode>& modes);

/// Fills modes_in/modes_out from the factors and gauge-fixes them.
void attach_modes(BlochMessiahResult& result, const BmOptions& opts = {});

struct SqueezingSpectrum {
  Vector r;
  double mean_photons_signal = 0.0;
  double mean_photons_idler = 0.0;
};

SqueezingSpectrum squeezing_spectrum(const BlochMessiahResult& result);

/// ⟨N_S⟩, ⟨N_I⟩ for vacuum input, from the beam blocks of S Sᵀ.
struct PhotonNumbers {
  double signal = 0.0;
  double idler = 0.0;
};
PhotonNumbers photon_numbers(const Matrix& S);

/// (Tr(S Sᵀ) − 4N)/8, equal to Σ sinh² r_k for a paired spectrum.
double trace_photon_number(const Matrix& S);

struct Residuals {
  double reconstruction = 0.0;  ///< ‖O Λ Õᵀ − S‖_max / ‖S‖_max
  double O_symplectic = 0.0, O_orthogonal = 0.0;
  double Ot_symplectic = 0.0, Ot_orthogonal = 0.0;
  double pair_degeneracy = 0.0;  ///< max relative gap within adjacent pairs
};

Residuals residuals(const BlochMessiahResult& result, const Matrix& S);

/**
 * Bisection on g₀ so that mean_ns(g₀) is within tol of target. The bracket
 * grows geometrically from [0, 1]; a decrease during bracketing or bisection
 * raises NumericalError.
 */
double tune_gain(const std::function<double(double)>& mean_ns, double target, double tol,
                 int max_iterations = 200);

void write_modes_csv(std::ostream& os, const BlochMessiahResult& result,
                     const FrequencyGrid& grid);

}  // namespace twinbeam
