#include "twinbeam/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include "twinbeam/errors.hpp"

namespace twinbeam {

namespace {

CVector normalized(const CVector& u) {
  const double n = u.norm();
  if (!(n > 0.0)) throw DomainError("mode has zero norm");
  return u / n;
}

void same_grid(const SchmidtMode& u, const SchmidtMode& v) {
  if (u.amplitudes.size() != v.amplitudes.size())
    throw DimensionError("modes live on different grids");
  if (u.beam != v.beam) throw DimensionError("modes belong to different beams");
}

PumpSpec with_gain(const PumpSpec& pump, double g0) {
  PumpSpec p = pump;
  p.g0 = g0;
  return p;
}

}  // namespace

double mode_fidelity(const CVector& u, const CVector& v) {
  if (u.size() != v.size()) throw DimensionError("modes live on different grids");
  return std::min(1.0, std::norm(normalized(u).dot(normalized(v))));
}

double mode_fidelity(const SchmidtMode& u, const SchmidtMode& v) {
  same_grid(u, v);
  return mode_fidelity(u.amplitudes, v.amplitudes);
}

double flip_overlap(const CVector& u_in, const CVector& u_out) {
  if (u_in.size() != u_out.size()) throw DimensionError("modes live on different grids");
  return mode_fidelity(u_in, CVector(u_out.reverse()));
}

double flip_overlap(const SchmidtMode& u_in, const SchmidtMode& u_out) {
  same_grid(u_in, u_out);
  return flip_overlap(u_in.amplitudes, u_out.amplitudes);
}

Propagator single_pass_propagator(const Setup& s, double g0) {
  return compose(s.medium, with_gain(s.pump, g0), s.grid, s.poling, s.compose);
}

Propagator double_pass_propagator(const Setup& s, double g0, double gain2) {
  return double_pass(s.medium, with_gain(s.pump, g0), s.grid, s.poling, gain2, s.compose);
}

BlochMessiahResult decompose(const Propagator& p, bool remove_free_phase, const BmOptions& bm) {
  BlochMessiahResult res = bloch_messiah(remove_free_phase ? remove_free_phase_of(p) : p.S, bm);
  attach_modes(res, bm);
  return res;
}

SweepResult gain_variation_sweep(const Setup& setup, double base, const SweepOptions& opts) {
  if (opts.points < 1) throw ConfigError("sweep: points must be >= 1");
  if (!(base > 0.0)) throw ConfigError("sweep: base photon number must be positive");
  SweepResult out;
  out.g0 = tune_gain(
      [&](double g) { return photon_numbers(double_pass_propagator(setup, g, 1.0).S).signal; },
      base, opts.tune_tol);
  auto ns_at = [&](double scale) {
    return photon_numbers(double_pass_propagator(setup, out.g0, scale).S).signal;
  };

  std::vector<double> scales;
  if (opts.points == 1) {
    scales.push_back(1.0);
  } else {
    double lo, hi;
    if (opts.scale_range) {
      std::tie(lo, hi) = *opts.scale_range;
    } else {
      const auto [nlo, nhi] = opts.ns_range.value_or(std::make_pair(0.5 * base, 1.5 * base));
      lo = tune_gain(ns_at, nlo, opts.tune_tol);
      hi = tune_gain(ns_at, nhi, opts.tune_tol);
    }
    for (int i = 0; i < opts.points; ++i)
      scales.push_back(lo + (hi - lo) * static_cast<double>(i) / (opts.points - 1));
  }

  out.points.resize(scales.size());
  auto run = [&](std::size_t i) {
    const Propagator p = double_pass_propagator(setup, out.g0, scales[i]);
    const BlochMessiahResult bm = decompose(p, setup.remove_free_phase, setup.bm);
    SweepPoint& pt = out.points[i];
    pt.gain2_scale = scales[i];
    pt.mean_NS = photon_numbers(p.S).signal;
    pt.fidelity_k1 = mode_fidelity(bm.mode(Direction::input, 0, Beam::signal),
                                   bm.mode(Direction::output, 0, Beam::signal));
    pt.r = bm.r;
  };

  const std::size_t jobs = static_cast<std::size_t>(std::max(1, opts.jobs));
  if (jobs == 1) {
    for (std::size_t i = 0; i < scales.size(); ++i) run(i);
  } else {
    std::mutex mu;
    std::exception_ptr err;
    std::size_t next = 0;
    auto worker = [&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (err || next >= scales.size()) return;
          i = next++;
        }
        try {
          run(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, scales.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "gain2_scale,mean_NS,fidelity_k1,r1,r2,r3\n" << std::setprecision(17);
  for (const auto& p : r.points) {
    os << p.gain2_scale << ',' << p.mean_NS << ',' << p.fidelity_k1;
    for (Eigen::Index k = 0; k < 3; ++k) os << ',' << (k < p.r.size() ? p.r(k) : 0.0);
    os << '\n';
  }
}

CVector inline_mismatch(const CMatrix& U, const Vector& phases, int k) {
  if (U.rows() != U.cols() || U.rows() != phases.size())
    throw DimensionError("inline_mismatch: U must be square and match the phase count");
  if (k < 0 || k >= U.rows()) throw DimensionError("inline_mismatch: seeded index out of range");
  const double unit = (U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
  if (unit > 1e-9) throw ContractViolation("inline_mismatch: U is not unitary");
  CVector e(phases.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) e(i) = std::polar(1.0, phases(i));
  const CMatrix V = U * e.asDiagonal() * U.adjoint();
  return V.row(k).transpose();
}

CMatrix alignment_unitary(const BlochMessiahResult& res, Beam beam) {
  const int n = static_cast<int>(res.N);
  CMatrix A(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      A(k, l) = res.mode(Direction::output, k, beam)
                    .amplitudes.dot(res.mode(Direction::input, l, beam).amplitudes);
  return A;
}

JsaOracle lowgain_jsa_oracle(const FrequencyGrid& grid, const PumpSpec& pump,
                             const MediumSpec& medium, const Poling& poling) {
  const int N = grid.N;
  const Vector d = grid.detunings();
  const double L = poling.length();
  const double ks = medium.kappa_S(), ki = medium.kappa_I();
  const PumpSpec shape = with_gain(pump, 1.0);
  JsaOracle o;
  o.jsa.resize(N, N);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < N; ++m) {
      const double dk = ks * d(n) + ki * d(m);
      // PMF referenced to the crystal center, matching the symmetric free-phase gauge
      const std::complex<double> phi = std::polar(1.0, 0.5 * dk * L) * pmf(poling, -dk);
      o.jsa(n, m) = pump_envelope_at_offset(shape, d(n) + d(m)) * phi;
    }
  Eigen::BDCSVD<CMatrix> svd(o.jsa, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector s = svd.singularValues();
  const double norm = s.norm();
  if (!(norm > 0.0)) throw ConfigError("jsa oracle: joint amplitude vanishes");
  o.schmidt_coeffs = s / norm;
  o.signal_modes = svd.matrixU();
  o.idler_modes = svd.matrixV().conjugate();
  for (int k = 0; k < N; ++k) {
    o.signal_modes.col(k) = gauge_fix(CVector(o.signal_modes.col(k)));
    o.idler_modes.col(k) = gauge_fix(CVector(o.idler_modes.col(k)));
  }
  return o;
}

void write_jsa_csv(std::ostream& os, const JsaOracle& o) {
  os << "signal_bin,idler_bin,re,im\n" << std::setprecision(17);
  for (Eigen::Index n = 0; n < o.jsa.rows(); ++n)
    for (Eigen::Index m = 0; m < o.jsa.cols(); ++m)
      os << n << ',' << m << ',' << o.jsa(n, m).real() << ',' << o.jsa(n, m).imag() << '\n';
}

void write_schmidt_csv(std::ostream& os, const JsaOracle& o) {
  os << "k,coefficient\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < o.schmidt_coeffs.size(); ++k)
    os << k + 1 << ',' << o.schmidt_coeffs(k) << '\n';
}

}  // namespace twinbeam
