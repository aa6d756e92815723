#include "twinbeam/numerics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

#include "twinbeam/errors.hpp"

namespace twinbeam::numerics {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(what) + ": expected square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double asymmetry(const Matrix& m) {
  require_square(m, "asymmetry");
  return max_abs(m - m.transpose());
}

Matrix expm(const Matrix& m) {
  require_square(m, "expm");
  require_finite(m, "expm");
  if (m.rows() == 0) return m;
  // Eigen's MatrixExponential: Higham's scaling-and-squaring with a [13/13] Padé
  // approximant, order chosen from the 1-norm.
  Matrix out = m.exp();
  return out;
}

SymEig sym_eig(const Matrix& m) {
  require_square(m, "sym_eig");
  require_finite(m, "sym_eig");
  const double scale = std::max(1.0, max_abs(m));
  const double asym = asymmetry(m);
  if (asym > 1e-9 * scale)
    throw ContractViolation("sym_eig: input asymmetry " + std::to_string(asym) +
                            " exceeds tolerance");
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: solver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

Svd svd(const Matrix& m) {
  require_finite(m, "svd");
  Eigen::BDCSVD<Matrix> s(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {s.matrixU(), s.singularValues(), s.matrixV()};
}

Matrix symplectic_form(Eigen::Index n) {
  Matrix om = Matrix::Zero(2 * n, 2 * n);
  om.topRightCorner(n, n).setIdentity();
  om.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return om;
}

Matrix exchange(Eigen::Index n) {
  Matrix j = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) j(i, n - 1 - i) = 1.0;
  return j;
}

double symplectic_residual(const Matrix& m) {
  require_square(m, "symplectic_residual");
  if (m.rows() % 2 != 0) throw DimensionError("symplectic_residual: odd dimension");
  const Matrix om = symplectic_form(m.rows() / 2);
  return max_abs(m * om * m.transpose() - om);
}

double orthogonality_residual(const Matrix& m) {
  return max_abs(m.transpose() * m - Matrix::Identity(m.cols(), m.cols()));
}

Matrix matrix_power(Matrix base, long long e) {
  require_square(base, "matrix_power");
  if (e < 0) throw DomainError("matrix_power: negative exponent");
  Matrix acc = Matrix::Identity(base.rows(), base.cols());
  while (e > 0) {
    if (e & 1) acc = base * acc;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return acc;
}

Matrix real_representation(const CMatrix& u) {
  const Eigen::Index r = u.rows(), c = u.cols();
  Matrix out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = u.real();
  out.topRightCorner(r, c) = -u.imag();
  out.bottomLeftCorner(r, c) = u.imag();
  out.bottomRightCorner(r, c) = u.real();
  return out;
}

}  // namespace twinbeam::numerics
