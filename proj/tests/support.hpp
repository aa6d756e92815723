#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "twinbeam/numerics.hpp"

/// Deterministic generators shared by the property tests.
namespace gen {

using twinbeam::CMatrix;
using twinbeam::Matrix;
using twinbeam::Vector;

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240611ULL);
  return engine;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

inline Matrix gaussian(Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng());
  return m;
}

inline Matrix symmetric(Eigen::Index n) {
  const Matrix a = gaussian(n, n);
  return 0.5 * (a + a.transpose());
}

inline Matrix orthogonal(Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  return q;
}

inline CMatrix unitary(Eigen::Index n) {
  const CMatrix a = gaussian(n, n).cast<std::complex<double>>() +
                    std::complex<double>(0, 1) * gaussian(n, n).cast<std::complex<double>>();
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ();
}

/// Orthogonal and symplectic: real representation of a random unitary.
inline Matrix orthosymplectic(Eigen::Index n) { return twinbeam::numerics::real_representation(unitary(n)); }

/// Λ = diag(λ, 1/λ) for single-mode squeezers paired as (r₀, r₀, r₁, r₁, …).
inline Vector paired_lambdas(const Vector& r) {
  const Eigen::Index N = r.size(), two_n = 2 * N;
  Vector lam(2 * two_n);
  for (Eigen::Index k = 0; k < N; ++k) {
    lam(2 * k) = lam(2 * k + 1) = std::exp(r(k));
    lam(two_n + 2 * k) = lam(two_n + 2 * k + 1) = std::exp(-r(k));
  }
  return lam;
}

}  // namespace gen
