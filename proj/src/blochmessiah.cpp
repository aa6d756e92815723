#include "twinbeam/blochmessiah.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "twinbeam/errors.hpp"

namespace twinbeam {

using numerics::max_abs;

const char* to_string(Beam b) { return b == Beam::signal ? "signal" : "idler"; }
const char* to_string(Direction d) { return d == Direction::input ? "input" : "output"; }

const SchmidtMode& BlochMessiahResult::mode(Direction d, int k, Beam b) const {
  const auto& list = d == Direction::input ? modes_in : modes_out;
  const std::size_t idx = 2 * static_cast<std::size_t>(k) + (b == Beam::idler ? 1 : 0);
  if (idx >= list.size()) throw DimensionError("mode index out of range (modes not attached?)");
  return list[idx];
}

namespace {

void check_dimension(const Matrix& S) {
  numerics::require_square(S, "bloch_messiah");
  if (S.rows() == 0 || S.rows() % 4 != 0)
    throw DimensionError("bloch_messiah: dimension must be a positive multiple of 4");
}

/// Signal-block weight of the W-combined column built from modes j and j+1.
double combined_signal_weight(const CMatrix& U, Eigen::Index j, Eigen::Index N) {
  const CVector a = (U.col(j) + std::complex<double>(0.0, 1.0) * U.col(j + 1)) / std::sqrt(2.0);
  return a.head(N).squaredNorm() / std::max(a.squaredNorm(), 1e-300);
}

void negate_mode(Matrix& F, Eigen::Index j, Eigen::Index two_n) {
  F.col(j) *= -1.0;
  F.col(two_n + j) *= -1.0;
}

Vector pair_r(const Vector& lambdas, Eigen::Index N, double r_tol) {
  Vector r(N);
  for (Eigen::Index k = 0; k < N; ++k) {
    const double v = 0.5 * (std::log(lambdas(2 * k)) + std::log(lambdas(2 * k + 1)));
    r(k) = v < r_tol ? 0.0 : v;
  }
  return r;
}

/// Fixes the within-pair orientation so that the rearranged column 2k is idler-like.
void orient_pairs(BlochMessiahResult& res) {
  const Eigen::Index N = res.N, two_n = 2 * N;
  const CMatrix U = factor_unitary(res.O);
  for (Eigen::Index k = 0; k < N; ++k) {
    if (res.r(k) == 0.0) continue;
    if (combined_signal_weight(U, 2 * k, N) > 0.5) {
      negate_mode(res.O, 2 * k + 1, two_n);
      negate_mode(res.O_tilde, 2 * k + 1, two_n);
    }
  }
}

}  // namespace

BlochMessiahResult bloch_messiah(const Matrix& S, const BmOptions& opts) {
  check_dimension(S);
  numerics::require_finite(S, "bloch_messiah");
  const double sres = numerics::symplectic_residual(S);
  if (sres > opts.input_symplectic_tol)
    throw ContractViolation("bloch_messiah: input symplectic residual " + std::to_string(sres) +
                            " exceeds " + std::to_string(opts.input_symplectic_tol));
  const Eigen::Index dim = S.rows(), two_n = dim / 2, N = dim / 4;
  const Matrix omega = numerics::symplectic_form(two_n);
  const Matrix M = S * S.transpose();
  const numerics::SymEig eig = numerics::sym_eig(0.5 * (M + M.transpose()));

  // Orthonormal basis of everything chosen so far (c and −Ωc columns).
  Matrix Q(dim, dim);
  Eigen::Index used = 0;
  Matrix C(dim, two_n);
  Eigen::Index modes = 0;
  Vector lam = Vector::Ones(two_n);

  auto add_mode = [&](const Vector& c) {
    C.col(modes) = c;
    Q.col(used++) = c;
    Q.col(used++) = -omega * c;
    ++modes;
  };
  auto orthogonalize = [&](Vector v) {
    for (int pass = 0; pass < 2 && used > 0; ++pass)
      v -= Q.leftCols(used) * (Q.leftCols(used).transpose() * v);
    return v;
  };

  // active stage: descending eigenvalues of S Sᵀ above e^{2 r_tol}
  for (Eigen::Index idx = dim - 1; idx >= 0 && modes < two_n; --idx) {
    const double mu = eig.values(idx);
    if (!(mu > 0.0) || 0.5 * std::log(mu) < opts.r_tol) break;
    Vector v = orthogonalize(eig.vectors.col(idx));
    const double nv = v.norm();
    if (nv <= 0.5) continue;
    v /= nv;
    lam(modes) = std::sqrt(v.dot(M * v));
    add_mode(v);
  }

  // passive stage: pivoted symplectic Gram-Schmidt over the canonical basis
  if (modes < two_n) {
    Matrix R = Matrix::Identity(dim, dim);
    if (used > 0) R -= Q.leftCols(used) * Q.leftCols(used).transpose();
    while (modes < two_n) {
      Eigen::Index best = 0;
      double best_norm = -1.0;
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double n = R.col(i).norm();
        if (n > best_norm * (1.0 + 1e-12)) {
          best_norm = n;
          best = i;
        }
      }
      if (best_norm < 1e-6)
        throw DecompositionError("bloch_messiah: passive completion lost rank");
      Vector c = orthogonalize(R.col(best) / best_norm);
      c /= c.norm();
      const Vector d = -omega * c;
      R -= c * (c.transpose() * R);
      R -= d * (d.transpose() * R);
      add_mode(c);
    }
  }
  if (used != dim) throw DecompositionError("bloch_messiah: incomplete symplectic basis");

  BlochMessiahResult res;
  res.N = N;
  res.O.resize(dim, dim);
  res.O.leftCols(two_n) = C;
  res.O.rightCols(two_n) = -omega * C;
  res.lambdas.resize(dim);
  res.lambdas.head(two_n) = lam;
  res.lambdas.tail(two_n) = lam.cwiseInverse();
  res.O_tilde = S.transpose() * res.O * res.lambdas.cwiseInverse().asDiagonal();
  res.r = pair_r(res.lambdas, N, opts.r_tol);
  orient_pairs(res);
  return res;
}

BlochMessiahResult standard_form(Matrix O, Vector lam, Matrix Ot, const BmOptions& opts) {
  check_dimension(O);
  const Eigen::Index dim = O.rows(), two_n = dim / 2, N = dim / 4;
  if (lam.size() != dim || Ot.rows() != dim || Ot.cols() != dim)
    throw DimensionError("standard_form: inconsistent factor sizes");
  for (Eigen::Index j = 0; j < two_n; ++j) {
    if (lam(j) < 0.0) {
      // Σ_z: move the sign into the output factor
      negate_mode(O, j, two_n);
      lam(j) = -lam(j);
      lam(two_n + j) = -lam(two_n + j);
    }
    if (lam(j) < 1.0) {
      // quarter-period rotation of mode j swaps λ and 1/λ
      for (Matrix* F : {&O, &Ot}) {
        const Vector a = F->col(j);
        F->col(j) = F->col(two_n + j);
        F->col(two_n + j) = -a;
      }
      std::swap(lam(j), lam(two_n + j));
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(two_n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return lam(a) > lam(b); });
  BlochMessiahResult res;
  res.N = N;
  res.O.resize(dim, dim);
  res.O_tilde.resize(dim, dim);
  res.lambdas.resize(dim);
  for (Eigen::Index j = 0; j < two_n; ++j) {
    const Eigen::Index s = order[static_cast<std::size_t>(j)];
    res.O.col(j) = O.col(s);
    res.O.col(two_n + j) = O.col(two_n + s);
    res.O_tilde.col(j) = Ot.col(s);
    res.O_tilde.col(two_n + j) = Ot.col(two_n + s);
    res.lambdas(j) = lam(s);
    res.lambdas(two_n + j) = lam(two_n + s);
  }
  res.r = pair_r(res.lambdas, N, opts.r_tol);
  orient_pairs(res);
  return res;
}

CMatrix beam_splitter_network(Eigen::Index two_n) {
  if (two_n % 2 != 0) throw DimensionError("beam splitter network needs an even size");
  CMatrix b = CMatrix::Zero(two_n, two_n);
  const double s = 1.0 / std::sqrt(2.0);
  const std::complex<double> i(0.0, s);
  for (Eigen::Index k = 0; k < two_n; k += 2) {
    b(k, k) = s;
    b(k, k + 1) = i;
    b(k + 1, k) = i;
    b(k + 1, k + 1) = s;
  }
  return b;
}

Matrix w_matrix(Eigen::Index two_n) {
  return numerics::real_representation(beam_splitter_network(two_n));
}

Rearranged two_mode_rearrange(const BlochMessiahResult& res, const BmOptions& opts) {
  const Eigen::Index two_n = 2 * res.N;
  for (Eigen::Index k = 0; k < res.N; ++k) {
    const double a = res.lambdas(2 * k), b = res.lambdas(2 * k + 1);
    if (std::abs(a - b) > opts.pairing_tol * std::max(a, b))
      throw DecompositionError("two_mode_rearrange: eigenvalues " + std::to_string(a) + " and " +
                               std::to_string(b) + " at pair " + std::to_string(k) +
                               " are not degenerate");
  }
  const Matrix W = w_matrix(two_n);
  Rearranged out;
  out.OW = res.O * W;
  out.OtW = res.O_tilde * W;
  out.lambda_tms = W.transpose() * res.lambdas.asDiagonal() * W;
  return out;
}

CMatrix factor_unitary(const Matrix& F) {
  if (F.rows() != F.cols() || F.rows() % 2 != 0)
    throw DimensionError("factor_unitary: expected an even square factor");
  const Eigen::Index h = F.rows() / 2;
  CMatrix U(h, h);
  U.real() = F.topLeftCorner(h, h);
  U.imag() = F.bottomLeftCorner(h, h);
  return U;
}

std::vector<SchmidtMode> extract_modes(const Matrix& rearranged, Direction direction,
                                       const Vector& r, const BmOptions& opts) {
  const CMatrix U = factor_unitary(rearranged);
  const Eigen::Index two_n = U.cols(), N = two_n / 2;
  if (two_n % 2 != 0 || r.size() != N) throw DimensionError("extract_modes: size mismatch");
  auto weight = [&](Eigen::Index c) {
    return U.col(c).head(N).squaredNorm() / std::max(U.col(c).squaredNorm(), 1e-300);
  };
  std::vector<SchmidtMode> out;
  out.reserve(static_cast<std::size_t>(two_n));
  for (Eigen::Index k = 0; k < N; ++k) {
    Eigen::Index sig = 2 * k + 1, idl = 2 * k;
    if (weight(idl) > weight(sig)) std::swap(sig, idl);
    for (int b = 0; b < 2; ++b) {
      const Eigen::Index c = b == 0 ? sig : idl;
      const double ws = weight(c);
      SchmidtMode m;
      m.beam = b == 0 ? Beam::signal : Beam::idler;
      m.direction = direction;
      m.k = static_cast<int>(k);
      m.r = r(k);
      m.passive = r(k) == 0.0;
      m.minority_weight = b == 0 ? 1.0 - ws : ws;
      m.mixed = m.minority_weight > opts.mixed_tol;
      CVector v = b == 0 ? CVector(U.col(c).head(N)) : CVector(U.col(c).tail(N));
      const double nv = v.norm();
      if (nv > 0.0) v /= nv;
      m.amplitudes = v;
      out.push_back(std::move(m));
    }
  }
  return out;
}

CVector gauge_fix(const CVector& u) {
  if (u.size() == 0) return u;
  Eigen::Index ref = u.size() % 2 == 1 ? u.size() / 2 : -1;
  if (ref < 0 || std::abs(u(ref)) < 1e-10) u.cwiseAbs().maxCoeff(&ref);
  const double mag = std::abs(u(ref));
  if (mag == 0.0) return u;
  const std::complex<double> phase = std::conj(u(ref)) / mag;
  CVector out = u * phase;
  out(ref) = std::complex<double>(std::abs(out(ref)), 0.0);
  return out;
}

void gauge_fix(std::vector<SchmidtMode>& modes) {
  for (auto& m : modes) m.amplitudes = gauge_fix(m.amplitudes);
}

void attach_modes(BlochMessiahResult& res, const BmOptions& opts) {
  const Rearranged rr = two_mode_rearrange(res, opts);
  res.modes_out = extract_modes(rr.OW, Direction::output, res.r, opts);
  res.modes_in = extract_modes(rr.OtW, Direction::input, res.r, opts);
  gauge_fix(res.modes_out);
  gauge_fix(res.modes_in);
}

SqueezingSpectrum squeezing_spectrum(const BlochMessiahResult& res) {
  SqueezingSpectrum s;
  s.r = res.r;
  double n = 0.0;
  for (Eigen::Index k = 0; k < res.r.size(); ++k) n += std::pow(std::sinh(res.r(k)), 2);
  s.mean_photons_signal = n;
  s.mean_photons_idler = n;
  return s;
}

PhotonNumbers photon_numbers(const Matrix& S) {
  numerics::require_square(S, "photon_numbers");
  const Eigen::Index N = S.rows() / 4;
  // only the diagonal of S Sᵀ is needed
  const Vector d = S.rowwise().squaredNorm();
  PhotonNumbers p;
  p.signal = (d.segment(0, N).sum() + d.segment(2 * N, N).sum() - 2.0 * N) / 4.0;
  p.idler = (d.segment(N, N).sum() + d.segment(3 * N, N).sum() - 2.0 * N) / 4.0;
  return p;
}

double trace_photon_number(const Matrix& S) {
  return (S.squaredNorm() - static_cast<double>(S.rows())) / 8.0;
}

Residuals residuals(const BlochMessiahResult& res, const Matrix& S) {
  Residuals out;
  const Matrix rec = res.O * res.lambdas.asDiagonal() * res.O_tilde.transpose();
  out.reconstruction = max_abs(rec - S) / std::max(max_abs(S), 1e-300);
  out.O_symplectic = numerics::symplectic_residual(res.O);
  out.O_orthogonal = numerics::orthogonality_residual(res.O);
  out.Ot_symplectic = numerics::symplectic_residual(res.O_tilde);
  out.Ot_orthogonal = numerics::orthogonality_residual(res.O_tilde);
  for (Eigen::Index k = 0; k < res.N; ++k) {
    const double a = res.lambdas(2 * k), b = res.lambdas(2 * k + 1);
    out.pair_degeneracy = std::max(out.pair_degeneracy, std::abs(a - b) / std::max(a, b));
  }
  return out;
}

double tune_gain(const std::function<double(double)>& mean_ns, double target, double tol,
                 int max_iterations) {
  if (!(target >= 0.0) || !std::isfinite(target)) throw ConfigError("tune_gain: target must be >= 0");
  if (!(tol > 0.0)) throw ConfigError("tune_gain: tolerance must be positive");
  if (target == 0.0) return 0.0;
  auto slack = [](double v) { return 1e-10 * std::max(1.0, std::abs(v)); };
  double lo = 0.0, flo = mean_ns(0.0);
  double hi = 1.0, fhi = mean_ns(1.0);
  if (std::abs(flo - target) <= tol) return lo;
  if (fhi < flo - slack(flo)) throw NumericalError("tune_gain: photon number decreased with gain");
  while (fhi < target) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    if (hi > 1e8) throw NumericalError("tune_gain: target not bracketed");
    fhi = mean_ns(hi);
    if (fhi < flo - slack(flo)) throw NumericalError("tune_gain: photon number decreased with gain");
  }
  if (std::abs(fhi - target) <= tol) return hi;
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = mean_ns(mid);
    if (fm < flo - slack(flo) || fm > fhi + slack(fhi))
      throw NumericalError("tune_gain: non-monotone response inside bracket");
    if (std::abs(fm - target) <= tol) return mid;
    if (fm < target) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  throw NumericalError("tune_gain: no convergence");
}

void write_modes_csv(std::ostream& os, const BlochMessiahResult& res, const FrequencyGrid& grid) {
  os << "k,beam,direction,bin,omega_detuning,re,im,r_k\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < res.N; ++k)
    for (Direction d : {Direction::input, Direction::output})
      for (Beam b : {Beam::signal, Beam::idler}) {
        const SchmidtMode& m = res.mode(d, static_cast<int>(k), b);
        for (int n = 0; n < grid.N; ++n)
          os << k + 1 << ',' << to_string(b) << ',' << to_string(d) << ',' << n << ','
             << grid.detuning(n) << ',' << m.amplitudes(n).real() << ',' << m.amplitudes(n).imag()
             << ',' << m.r << '\n';
      }
}

}  // namespace twinbeam
