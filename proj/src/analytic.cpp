#include "twinbeam/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "twinbeam/errors.hpp"
#include "twinbeam/propagator.hpp"

namespace twinbeam {

using numerics::max_abs;

const char* to_string(Regime r) { return r == Regime::sgvm ? "sgvm" : "general"; }

Matrix sgvm_transform(Eigen::Index N) {
  const Matrix I = Matrix::Identity(N, N);
  Matrix B = Matrix::Zero(4 * N, 4 * N);
  B.block(0, 0, N, N) = I;
  B.block(0, 3 * N, N, N) = I;
  B.block(N, N, N, N) = I;
  B.block(N, 2 * N, N, N) = I;
  B.block(2 * N, N, N, N) = -I;
  B.block(2 * N, 2 * N, N, N) = I;
  B.block(3 * N, 0, N, N) = -I;
  B.block(3 * N, 3 * N, N, N) = I;
  return B / std::sqrt(2.0);
}

Matrix general_transform(Eigen::Index N) {
  const Matrix I = Matrix::Identity(N, N);
  const Matrix J = numerics::exchange(N);
  Matrix B = Matrix::Zero(4 * N, 4 * N);
  B.block(0, N, N, N) = I;
  B.block(0, 3 * N, N, N) = J;
  B.block(N, 0, N, N) = I;
  B.block(N, 2 * N, N, N) = J;
  B.block(2 * N, N, N, N) = -J;
  B.block(2 * N, 3 * N, N, N) = I;
  B.block(3 * N, 0, N, N) = -J;
  B.block(3 * N, 2 * N, N, N) = I;
  return B / std::sqrt(2.0);
}

Matrix involution(Regime regime, Eigen::Index N) {
  Matrix Y = Matrix::Zero(2 * N, 2 * N);
  if (regime == Regime::sgvm) {
    Y.topRightCorner(N, N).setIdentity();
    Y.bottomLeftCorner(N, N).setIdentity();
  } else {
    const Matrix J = numerics::exchange(N);
    Y.topLeftCorner(N, N) = J;
    Y.bottomRightCorner(N, N) = J;
  }
  return Y;
}

Matrix partner(Regime regime, Eigen::Index N) {
  if (regime == Regime::sgvm) return numerics::symplectic_form(N);
  Matrix Z = Matrix::Identity(2 * N, 2 * N);
  Z.bottomRightCorner(N, N) *= -1.0;
  return Z;
}

BlockReduction block_reduce(const Matrix& Q, Regime regime, double rel_tol) {
  numerics::require_square(Q, "block_reduce");
  if (Q.rows() % 4 != 0) throw DimensionError("block_reduce: dimension must be a multiple of 4");
  const Eigen::Index N = Q.rows() / 4, two_n = 2 * N;
  BlockReduction r;
  r.regime = regime;
  r.transform = regime == Regime::sgvm ? sgvm_transform(N) : general_transform(N);
  r.involution = involution(regime, N);
  const Matrix R = r.transform.transpose() * Q * r.transform;
  r.block = R.topLeftCorner(two_n, two_n);
  r.offdiag_residual =
      std::max(max_abs(R.topRightCorner(two_n, two_n)), max_abs(R.bottomLeftCorner(two_n, two_n)));
  r.lower_residual = max_abs(R.bottomRightCorner(two_n, two_n) + r.block.transpose());
  const double scale = std::max(max_abs(Q), 1e-300);
  const double worst = std::max(r.offdiag_residual, r.lower_residual);
  if (worst > rel_tol * scale)
    throw RegimeError(std::string("block_reduce: generator is not block-diagonal in the ") +
                          to_string(regime) + " frame",
                      worst / scale);
  return r;
}

bool detect_regime(const MediumSpec& medium, const PumpSpec& pump, Regime& out) {
  if (medium.sgvm()) {
    out = Regime::sgvm;
    return true;
  }
  if (pump.frequency_symmetric) {
    out = Regime::general;
    return true;
  }
  return false;
}

namespace {


Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// Reduced-frame block of the free rotation R(−θ/2), checked to be block diagonal.
Matrix reduced_half_rotation(const Matrix& T, const Vector& angles) {
  const Matrix R = T.transpose() * free_rotation(-0.5 * angles) * T;
  const Eigen::Index h = R.rows() / 2;
  const double off = std::max(max_abs(R.topRightCorner(h, h)), max_abs(R.bottomLeftCorner(h, h)));
  if (off > 1e-12)
    throw RegimeError("free-phase rotation is not block diagonal in the reduced frame", off);
  return R.topLeftCorner(h, h);
}

void require_regime(const MediumSpec& medium, const PumpSpec& pump, Regime regime) {
  if (regime == Regime::sgvm && !medium.sgvm()) {
    const double ks = medium.kappa_S(), ki = medium.kappa_I();
    throw RegimeError("sgvm route requires kappa_S = -kappa_I",
                      std::abs(ks + ki) / std::max({std::abs(ks), std::abs(ki), 1e-300}));
  }
  if (regime == Regime::general && !pump.frequency_symmetric)
    throw RegimeError("general route requires a frequency-symmetric pump", 1.0);
}

BlochMessiahResult finish(Matrix O, Vector lam, Matrix Ot, const RouteOptions& opts) {
  BlochMessiahResult res = standard_form(std::move(O), std::move(lam), std::move(Ot), opts.bm);
  attach_modes(res, opts.bm);
  return res;
}

}  // namespace

ReducedProduct reduced_product(const MediumSpec& medium, const PumpSpec& pump,
                               const FrequencyGrid& grid, const Poling& poling, Regime regime,
                               bool qpm_fast_path) {
  validate(medium);
  validate(poling, medium.length);
  require_regime(medium, pump, regime);
  const Eigen::Index two_n = 2 * grid.N;
  ReducedProduct rp;
  rp.regime = regime;
  rp.transform = regime == Regime::sgvm ? sgvm_transform(grid.N) : general_transform(grid.N);

  std::map<int, Matrix> blocks;
  auto block = [&](int sign) -> const Matrix& {
    auto it = blocks.find(sign);
    if (it == blocks.end()) {
      const Matrix Q = build_generator(build_coupled_matrices(grid, pump, medium, sign));
      it = blocks.emplace(sign, block_reduce(Q, regime).block).first;
    }
    return it->second;
  };
  std::map<ExpKey, Matrix> cache;
  auto exp_of = [&](const Domain& d) -> const Matrix& {
    const ExpKey key = make_key(d.width, medium.length, d.sign, 0);
    auto it = cache.find(key);
    if (it != cache.end()) {
      ++rp.cache_hits;
      return it->second;
    }
    ++rp.exponentials;
    return cache.emplace(key, numerics::expm(d.width * block(d.sign))).first->second;
  };

  if (qpm_fast_path && poling.qpm_pattern()) {
    rp.K = qpm_product(poling, exp_of, rp.cache_hits);
  } else {
    rp.K = Matrix::Identity(two_n, two_n);
    for (const auto& d : poling.domains) rp.K = exp_of(d) * rp.K;
  }
  rp.free_angles = free_angles(medium, grid, poling.length());
  return rp;
}

Matrix expand_reduced(const Matrix& T, const Matrix& K) {
  const Eigen::Index h = K.rows();
  const Matrix KinvT = K.partialPivLu().inverse().transpose();
  Matrix TD(T.rows(), 2 * h);
  TD.leftCols(h).noalias() = T.leftCols(h) * K;
  TD.rightCols(h).noalias() = T.rightCols(h) * KinvT;
  Matrix S;
  S.noalias() = TD * T.transpose();
  return S;
}

BlochMessiahResult symmetrized_eig_route(const MediumSpec& medium, const PumpSpec& pump,
                                         const FrequencyGrid& grid, const Poling& poling,
                                         Regime regime, const RouteOptions& opts) {
  ReducedProduct rp = reduced_product(medium, pump, grid, poling, regime);
  Matrix K = rp.K;
  if (opts.remove_free_phase) {
    const Matrix E = reduced_half_rotation(rp.transform, rp.free_angles);
    K = E * K * E;
  }
  const Matrix Y = involution(regime, grid.N);
  const Matrix YK = Y * K;
  const double scale = std::max(max_abs(YK), 1e-300);
  const double asym = numerics::asymmetry(YK) / scale;
  if (asym > opts.symmetry_tol)
    throw RegimeError("symmetrized product is not symmetric (poling not palindromic?)", asym);
  const numerics::SymEig eig = numerics::sym_eig(0.5 * (YK + YK.transpose()));
  const Matrix& G = eig.vectors;
  const Matrix YG = Y * G;
  const Eigen::Index two_n = 2 * grid.N;
  Vector lam(2 * two_n);
  lam.head(two_n) = eig.values;
  lam.tail(two_n) = eig.values.cwiseInverse();
  return finish(rp.transform * block_diag(YG, YG), lam, rp.transform * block_diag(G, G), opts);
}

BlochMessiahResult svd_route(const MediumSpec& medium, const PumpSpec& pump,
                             const FrequencyGrid& grid, const Poling& poling, Pass pass,
                             double gain2, const RouteOptions& opts) {
  require_regime(medium, pump, Regime::sgvm);
  const ReducedProduct p1 = reduced_product(medium, pump, grid, poling, Regime::sgvm);
  const Matrix& T = p1.transform;
  const Eigen::Index two_n = 2 * grid.N;
  Matrix K = p1.K;
  Vector angles = p1.free_angles;
  bool symmetric_double = false;
  if (pass == Pass::double_pass) {
    const ReducedProduct p2 = reduced_product(medium.swapped(), pump.scaled(gain2), grid,
                                              poling.reversed(), Regime::sgvm);
    angles += p2.free_angles;
    // matched passes: the second-pass product is the transpose of the first
    symmetric_double =
        gain2 == 1.0 && max_abs(p2.K - p1.K.transpose()) <= 1e-10 * max_abs(p1.K);
    K = p2.K * p1.K;
  }
  if (opts.remove_free_phase && angles.cwiseAbs().maxCoeff() > 0.0) {
    const Matrix E = reduced_half_rotation(T, angles);
    K = E * K * E;
    symmetric_double = false;
  }
  Vector lam(2 * two_n);
  if (symmetric_double) {
    const numerics::Svd s = numerics::svd(p1.K);
    const Vector d2 = s.sigma.cwiseAbs2();
    lam.head(two_n) = d2;
    lam.tail(two_n) = d2.cwiseInverse();
    const Matrix O = T * block_diag(s.V, s.V);
    return finish(O, lam, O, opts);
  }
  const numerics::Svd s = numerics::svd(K);
  lam.head(two_n) = s.sigma;
  lam.tail(two_n) = s.sigma.cwiseInverse();
  return finish(T * block_diag(s.U, s.U), lam, T * block_diag(s.V, s.V), opts);
}

bool StructureReport::all_hard_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass || !c.hard; });
}

const Check* StructureReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

double count_flip_classes(const Matrix& sym, int& symmetric, int& antisymmetric,
                          double cluster_tol) {
  const Eigen::Index two_n = sym.rows();
  if (two_n % 2 != 0) throw DimensionError("count_flip_classes: odd dimension");
  const Matrix J2 = flip_2n(two_n / 2);
  const numerics::SymEig eig = numerics::sym_eig(sym);
  symmetric = antisymmetric = 0;
  double worst = 0.0;
  Eigen::Index start = 0;
  while (start < two_n) {
    Eigen::Index end = start + 1;
    while (end < two_n && eig.values(end) - eig.values(end - 1) <=
                              cluster_tol * std::max(1.0, std::abs(eig.values(end))))
      ++end;
    const Matrix V = eig.vectors.middleCols(start, end - start);
    const numerics::SymEig parity = numerics::sym_eig(V.transpose() * J2 * V);
    const Matrix P = V * parity.vectors;
    for (Eigen::Index i = 0; i < P.cols(); ++i) {
      const double s = parity.values(i) >= 0.0 ? 1.0 : -1.0;
      (s > 0 ? symmetric : antisymmetric) += 1;
      worst = std::max(worst, (J2 * P.col(i) - s * P.col(i)).cwiseAbs().maxCoeff());
    }
    start = end;
  }
  return worst;
}

StructureReport structure_checks(const MediumSpec& medium, const PumpSpec& pump,
                                 const FrequencyGrid& grid, const Poling& poling) {
  StructureReport rep;
  const Eigen::Index N = grid.N;
  auto add = [&](std::string name, double value, double tol, bool hard, std::string note = {}) {
    Check c{std::move(name), value, tol, value <= tol, hard, std::move(note)};
    rep.checks.push_back(c);
    return c.pass;
  };
  const CoupledMatrices cm = build_coupled_matrices(grid, pump, medium, 1);
  const Matrix J = numerics::exchange(N);
  const double fmax = max_abs(cm.F);
  auto rel = [](double v, double s) { return s > 0.0 ? v / s : v; };

  add("F.symmetry", max_abs(cm.F - cm.F.transpose()), 0.0, true);
  const double fcentro = rel(max_abs(cm.F - J * cm.F * J), fmax);
  rep.centrosymmetric_pump = add("F.centrosymmetry", fcentro, 1e-14, pump.frequency_symmetric,
                                 pump.frequency_symmetric ? "" : "pump declared asymmetric");
  const double gmax = max_abs(cm.G);
  add("G.anticentrosymmetry", rel(max_abs(J * cm.G * J + cm.G), gmax), 1e-15, true);

  const Matrix Q = build_generator(cm);
  const Matrix omega = numerics::symplectic_form(2 * N);
  add("generator.hamiltonian", rel(numerics::asymmetry(omega * Q), max_abs(Q)), 1e-14, true);

  const double ks = medium.kappa_S(), ki = medium.kappa_I();
  const double kscale = std::max({std::abs(ks), std::abs(ki), 1e-300});
  add("sgvm.residual", std::abs(ks + ki) / kscale, 1e-12, false,
      medium.sgvm() ? "sgvm" : "walk-offs not symmetric");

  Regime regime;
  if (!detect_regime(medium, pump, regime)) {
    add("block.offdiag", 1.0, 1e-12, false, "no block reduction applies");
    return rep;
  }
  double offdiag = 0.0;
  Matrix Kseg;
  try {
    const BlockReduction br = block_reduce(Q, regime, 1.0);
    offdiag = std::max(br.offdiag_residual, br.lower_residual) / std::max(max_abs(Q), 1e-300);
    Kseg = br.block;
  } catch (const RegimeError& e) {
    offdiag = e.residual();
  }
  if (!add("block.offdiag", offdiag, 1e-12, true, to_string(regime))) return rep;

  const Matrix Y = involution(regime, N);
  const Matrix YE = Y * numerics::expm(medium.length * Kseg);
  const double yscale = std::max(1.0, max_abs(YE));
  add("segment.symmetrization", numerics::asymmetry(YE) / yscale, 1e-9, true);

  // eigenvalue pairing of the single-segment symmetric product
  {
    const numerics::SymEig e = numerics::sym_eig(0.5 * (YE + YE.transpose()));
    const Eigen::Index m = e.values.size();
    double worst = 0.0;
    if (regime == Regime::sgvm) {
      for (Eigen::Index i = 0; i < m; ++i)
        worst = std::max(worst, std::abs(e.values(i) + e.values(m - 1 - i)) /
                                    std::max(1.0, std::abs(e.values(i))));
    } else {
      std::vector<double> logs;
      for (Eigen::Index i = 0; i < m; ++i) logs.push_back(std::log(std::abs(e.values(i))));
      std::sort(logs.begin(), logs.end());
      for (std::size_t i = 0; i < logs.size(); ++i)
        worst = std::max(worst, std::abs(logs[i] + logs[logs.size() - 1 - i]));
    }
    add("segment.eigen_pairing", worst, 1e-8, true,
        regime == Regime::sgvm ? "(lambda, -lambda)" : "(lambda, 1/lambda)");
  }

  const ReducedProduct rp = reduced_product(medium, pump, grid, poling, regime);
  const Matrix YK = Y * rp.K;
  const double pk = std::max(1.0, max_abs(rp.K));
  add("product.symmetrization", numerics::asymmetry(YK) / pk, 1e-9, poling.palindromic(),
      poling.palindromic() ? "palindromic poling" : "poling not palindromic");

  if (regime == Regime::sgvm) {
    const Matrix J2 = flip_2n(N);
    add("product.centrosymmetry", max_abs(J2 * rp.K * J2 - rp.K) / pk, 1e-10,
        pump.frequency_symmetric);
    const Matrix target = poling.palindromic() ? Matrix(0.5 * (YK + YK.transpose()))
                                               : Matrix(0.5 * (YE + YE.transpose()));
    int s = 0, a = 0;
    const double parity = count_flip_classes(target, s, a);
    rep.flip_symmetric = s;
    rep.flip_antisymmetric = a;
    add("flip.parity_residual", parity, 1e-8, pump.frequency_symmetric);
    add("flip.class_balance", std::abs(s - a), 0.0, pump.frequency_symmetric,
        std::to_string(s) + " symmetric / " + std::to_string(a) + " antisymmetric");
  }
  return rep;
}

nlohmann::json to_json(const Check& c) {
  nlohmann::json j{{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance},
                   {"pass", c.pass}, {"hard", c.hard}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

nlohmann::json to_json(const StructureReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"checks", checks},
          {"centrosymmetric_pump", r.centrosymmetric_pump},
          {"flip_symmetric", r.flip_symmetric},
          {"flip_antisymmetric", r.flip_antisymmetric},
          {"all_hard_pass", r.all_hard_pass()}};
}

}  // namespace twinbeam
