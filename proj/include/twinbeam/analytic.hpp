#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "twinbeam/blochmessiah.hpp"
#include "twinbeam/model.hpp"

namespace twinbeam {

enum class Regime { sgvm, general };

const char* to_string(Regime r);

/// B: maps the SGVM generator to diag(A, −Aᵀ).
Matrix sgvm_transform(Eigen::Index N);
/// B₂: maps the general (frequency-symmetric) generator to diag(C, −Cᵀ).
Matrix general_transform(Eigen::Index N);
/// X (sgvm) or J̃ (general): Y K Y = Kᵀ for the reduced block K.
Matrix involution(Regime regime, Eigen::Index N);
/// Ω₂N (sgvm, maps λ → −λ) or Z (general, maps λ → 1/λ).
Matrix partner(Regime regime, Eigen::Index N);

struct BlockReduction {
  Regime regime = Regime::sgvm;
  Matrix transform;   ///< 4N×4N orthogonal
  Matrix block;       ///< 2N×2N, A or C
  Matrix involution;  ///< X or J̃
  double offdiag_residual = 0.0;  ///< max of the off-diagonal blocks after transform
  double lower_residual = 0.0;    ///< ‖lower-right + blockᵀ‖_max
};

/// Transforms Q̃ and measures the block structure; throws RegimeError when it fails.
BlockReduction block_reduce(const Matrix& generator, Regime regime, double rel_tol = 1e-12);

/// Regime usable for the given medium/pump (sgvm first), or false when neither holds.
bool detect_regime(const MediumSpec& medium, const PumpSpec& pump, Regime& out);

/**
 * Reduced 2N×2N product 𝒦 = Π e^{w_p K_{s_p}} (later domains on the left), with
 * the same exponential cache policy as the propagator.
 */
struct ReducedProduct {
  Regime regime = Regime::sgvm;
  Matrix transform;
  Matrix K;            ///< product in the reduced frame
  Vector free_angles;  ///< accumulated free rotation angles (2N)
  std::size_t exponentials = 0;
  std::size_t cache_hits = 0;
};

ReducedProduct reduced_product(const MediumSpec& medium, const PumpSpec& pump,
                               const FrequencyGrid& grid, const Poling& poling, Regime regime,
                               bool qpm_fast_path = false);

/// Full 4N propagator T diag(𝒦, 𝒦^{-T}) Tᵀ from a reduced product.
Matrix expand_reduced(const Matrix& transform, const Matrix& K);

struct RouteOptions {
  bool remove_free_phase = false;
  double symmetry_tol = 1e-8;  ///< relative symmetry residual allowed for Y𝒦
  BmOptions bm;
};

/**
 * Decomposition through the eigendecomposition of the symmetric product Y𝒦.
 * Requires a palindromic poling (single segment, QPM with odd count, or a
 * mirrored apodization).
 */
BlochMessiahResult symmetrized_eig_route(const MediumSpec& medium, const PumpSpec& pump,
                                         const FrequencyGrid& grid, const Poling& poling,
                                         Regime regime, const RouteOptions& opts = {});

enum class Pass { single, double_pass };

/// SGVM decomposition through the SVD of 𝒜; double pass uses 𝒜ᵀ𝒜 when both passes match.
BlochMessiahResult svd_route(const MediumSpec& medium, const PumpSpec& pump,
                             const FrequencyGrid& grid, const Poling& poling, Pass pass,
                             double gain2 = 1.0, const RouteOptions& opts = {});

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  bool hard = true;  ///< failure of a hard check makes verification fail
  std::string note;
};

struct StructureReport {
  std::vector<Check> checks;
  bool centrosymmetric_pump = true;
  int flip_symmetric = 0;
  int flip_antisymmetric = 0;
  bool all_hard_pass() const;
  const Check* find(const std::string& name) const;
};

/**
 * Symmetry diagnostics for a configuration. Checks that only make sense for a
 * frequency-symmetric pump are marked soft when the pump is skewed.
 */
StructureReport structure_checks(const MediumSpec& medium, const PumpSpec& pump,
                                 const FrequencyGrid& grid, const Poling& poling);

/**
 * Counts eigenvectors of a symmetric, J₂N-centrosymmetric matrix by flip parity.
 * Near-degenerate clusters are resolved by diagonalizing J₂N inside the cluster.
 * Returns the largest parity residual ‖J₂N v ∓ v‖.
 */
double count_flip_classes(const Matrix& sym, int& symmetric, int& antisymmetric,
                          double cluster_tol = 1e-6);

nlohmann::json to_json(const Check& c);
nlohmann::json to_json(const StructureReport& r);

}  // namespace twinbeam
