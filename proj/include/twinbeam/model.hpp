#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "twinbeam/numerics.hpp"

namespace twinbeam {

/**
 * Symmetric discretization of the signal/idler detunings.
 *
 * Bins are ω_n = center + d_n with d_n = δ·(2n − (N−1))/(N−1), n = 0…N−1.
 * The detunings are generated from integer arithmetic so that d_{N−1−n} = −d_n
 * holds bit-for-bit.
 */
struct FrequencyGrid {
  int N = 0;
  double center = 0.0;      ///< ω̄, degenerate central frequency
  double half_width = 0.0;  ///< δ

  double spacing() const { return 2.0 * half_width / (N - 1); }
  double detuning(int n) const;
  double omega(int n) const { return center + detuning(n); }
  Vector detunings() const;
  int center_bin() const { return N % 2 == 1 ? N / 2 : -1; }
};

FrequencyGrid build_grid(int N, double center, double half_width);

/// Default half-width rule 5σ·max(1, 1/(|κ|σL)).
double default_half_width(double sigma, double kappa, double length);

enum class Envelope { gaussian, tabulated };

/**
 * Pump spectrum. The collapsed coupling prefactor is the real scalar g0.
 * Tabulated envelopes are sampled at offsets from the pump center.
 */
struct PumpSpec {
  double center = 0.0;  ///< ω̄_P, must equal 2ω̄
  double sigma = 1.0;
  double g0 = 0.0;
  Envelope envelope = Envelope::gaussian;
  std::vector<double> offsets;  ///< tabulated sample positions, strictly increasing
  std::vector<double> values;   ///< tabulated envelope samples
  bool frequency_symmetric = true;

  PumpSpec scaled(double factor) const {
    PumpSpec p = *this;
    p.g0 *= factor;
    return p;
  }
};

PumpSpec gaussian_pump(double center, double sigma, double g0);

/// Tabulated pump; the flag must agree with the samples (checked to 1e-12 relative).
PumpSpec tabulated_pump(double center, double sigma, double g0, std::vector<double> offsets,
                        std::vector<double> values, bool frequency_symmetric);

/// Envelope value at offset x = ω_sum − ω̄_P.
double pump_envelope_at_offset(const PumpSpec& pump, double x);

double pump_amplitude(const PumpSpec& pump, double omega_sum);

struct MediumSpec {
  double vP = 1.0, vS = 1.0, vI = 1.0;
  double length = 1.0;

  double kappa_S() const { return 1.0 / vS - 1.0 / vP; }
  double kappa_I() const { return 1.0 / vI - 1.0 / vP; }
  bool sgvm() const;
  /// Same crystal with the signal and idler group velocities exchanged.
  MediumSpec swapped() const {
    MediumSpec m = *this;
    std::swap(m.vS, m.vI);
    return m;
  }
};

void validate(const MediumSpec& medium);

struct Domain {
  double width = 0.0;
  int sign = 1;  ///< −1, 0 or +1
};

struct Poling {
  std::vector<Domain> domains;

  double length() const;
  Poling reversed() const;
  bool palindromic() const;
  /// Odd count ≥ 3, signs alternating from +1, equal interior widths and equal
  /// end widths (the shape produced by qpm_poling).
  bool qpm_pattern(double rel_tol = 1e-12) const;
};

/// Throws ConfigError unless widths are positive, signs valid and Σ widths = L (1e-12 relative).
void validate(const Poling& poling, double length);

Poling unpoled(double length);

/// Alternating ±1 domains of width period/2 with an odd count; the overshoot is
/// trimmed evenly from the two end domains, keeping the sequence palindromic.
Poling qpm_poling(double length, double period);

/// Cumulative target for the greedy domain tracker.
struct PmfTarget {
  enum class Kind { gaussian, constant } kind = Kind::gaussian;
  double width = 1.0;  ///< Gaussian PMF width σ_k (unused for constant)
};

/**
 * Domain-engineered poling whose PMF approximates `target` around `carrier`.
 *
 * A greedy sign tracker follows the scaled cumulative target over the first
 * half (including the middle domain for odd counts); the second half mirrors
 * it, which makes the sequence palindromic.
 */
Poling apodized_poling(double length, double domain_width, const PmfTarget& target,
                       double carrier = 0.0);

/// Φ(Δk) = (1/L) Σ_p s_p ∫ e^{iΔk z} dz over each domain.
std::complex<double> pmf(const Poling& poling, double dk);

/// |Φ| of the ideal Gaussian profile that apodized_poling tracks (untruncated envelope).
double gaussian_pmf_target(const Poling& poling, double pmf_width, double carrier, double dk);

/// Relative L² error of |Φ| against gaussian_pmf_target over carrier ± 5·pmf_width.
double pmf_relative_l2_error(const Poling& poling, double pmf_width, double carrier,
                             int points = 401);

void write_poling(std::ostream& os, const Poling& poling);
Poling read_poling(std::istream& is);
void save_poling(const std::string& path, const Poling& poling);
Poling load_poling(const std::string& path);

struct CoupledMatrices {
  Matrix G, H, F;
  int sign = 1;
};

CoupledMatrices build_coupled_matrices(const FrequencyGrid& grid, const PumpSpec& pump,
                                       const MediumSpec& medium, int sign);

/// 4N×4N generator in (X_S, X_I, P_S, P_I) block order.
Matrix build_generator(const CoupledMatrices& m);

/// Anti-diagonal block matrix [[0, J], [J, 0]] of size 2n.
Matrix flip_2n(Eigen::Index n);

}  // namespace twinbeam
