#pragma once

#include <Eigen/Dense>

namespace twinbeam {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

namespace numerics {

struct SymEig {
  Vector values;  ///< ascending
  Matrix vectors; ///< orthogonal, columns match `values`
};

struct Svd {
  Matrix U;
  Vector sigma;  ///< nonnegative, descending
  Matrix V;
};

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
Matrix expm(const Matrix& m);

/// Eigendecomposition of a real symmetric matrix. The input is symmetrized as
/// (M + Mᵀ)/2 after checking ‖M − Mᵀ‖_max ≤ 1e-9·max(1, ‖M‖_max).
SymEig sym_eig(const Matrix& m);

Svd svd(const Matrix& m);

void require_finite(const Matrix& m, const char* what);
void require_square(const Matrix& m, const char* what);

double max_abs(const Matrix& m);

/// Symmetry residual ‖M − Mᵀ‖_max.
double asymmetry(const Matrix& m);

/// Canonical form [[0, I_n], [−I_n, 0]] of size 2n.
Matrix symplectic_form(Eigen::Index n);

/// Exchange (anti-identity) matrix of size n.
Matrix exchange(Eigen::Index n);

/// ‖M Ω Mᵀ − Ω‖_max for a 2n×2n matrix M.
double symplectic_residual(const Matrix& m);

/// ‖MᵀM − I‖_max.
double orthogonality_residual(const Matrix& m);

/// Non-negative integer power by repeated squaring.
Matrix matrix_power(Matrix base, long long exponent);

/// Real representation [[Re U, −Im U], [Im U, Re U]] of a complex matrix.
Matrix real_representation(const CMatrix& u);

}  // namespace numerics
}  // namespace twinbeam
