#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "twinbeam/model.hpp"

namespace twinbeam {

/// Heisenberg-picture propagator r_out = S r_in, quadratures ordered (X_S, X_I, P_S, P_I).
struct Propagator {
  Matrix S;
  FrequencyGrid grid;
  Vector free_angles;  ///< accumulated free-rotation angles (signal bins, idler bins)
};

struct CacheStats {
  std::size_t computed = 0;
  std::size_t hits = 0;
};

struct ComposeOptions {
  bool force_full = false;     ///< skip the reduced 2N frame and exponentiate 4N generators
  bool qpm_fast_path = false;  ///< binary powering of the two-domain block for uniform QPM
};

/// Cache key width quantum: widths are rounded to 1e-15 of this scale.
struct ExpKey {
  long long width_q;
  int sign;
  int tag;
  auto operator<=>(const ExpKey&) const = default;
};
ExpKey make_key(double width, double scale, int sign, int tag);

/**
 * Product of a qpm_pattern poling as E_end (E₋ E₊)^k E₋ E_end with k = (n − 3)/2,
 * using three exponentials at most. `exp_of(domain)` supplies cached exponentials;
 * the domains not looked up are added to `hits`.
 */
template <class ExpOf>
Matrix qpm_product(const Poling& poling, ExpOf&& exp_of, std::size_t& hits) {
  const std::size_t n = poling.domains.size();
  const Matrix e_end = exp_of(poling.domains.front());
  const Matrix e_minus = exp_of(poling.domains[1]);
  std::size_t looked_up = 2;
  Matrix inner = e_minus;
  if (n >= 5) {
    const Matrix& e_plus = exp_of(poling.domains[2]);
    ++looked_up;
    inner = numerics::matrix_power(e_minus * e_plus, static_cast<long long>((n - 3) / 2)) * e_minus;
  }
  hits += n - looked_up;
  return e_end * inner * e_end;
}

Propagator segment_propagator(const FrequencyGrid& grid, const CoupledMatrices& m, double dz);

Propagator compose(const MediumSpec& medium, const PumpSpec& pump, const FrequencyGrid& grid,
                   const Poling& poling, const ComposeOptions& opts = {},
                   CacheStats* stats = nullptr);

/// S₂·S₁ with the second pass on the reversed poling, swapped velocities and pump × gain2.
Propagator double_pass(const MediumSpec& medium, const PumpSpec& pump, const FrequencyGrid& grid,
                       const Poling& poling, double gain2 = 1.0, const ComposeOptions& opts = {},
                       CacheStats* stats = nullptr);

/// Block rotation with per-bin angles (θ_S, θ_I).
Matrix free_rotation(const Vector& angles);

Vector free_angles(const MediumSpec& medium, const FrequencyGrid& grid, double length);

Propagator free_propagator(const MediumSpec& medium, const FrequencyGrid& grid, double length);

/// R(−θ/2)·S·R(−θ/2): removes the accumulated free phase split evenly across input and output.
Propagator remove_free_phase(const Propagator& p);
/// Matrix part of remove_free_phase.
Matrix remove_free_phase_of(const Propagator& p);

void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

}  // namespace twinbeam
