#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "twinbeam/analysis.hpp"
#include "twinbeam/analytic.hpp"
#include "twinbeam/errors.hpp"

using namespace twinbeam;
using numerics::max_abs;

namespace {

MediumSpec medium(double vI, double L) {
  MediumSpec m;
  m.vS = 2.0 / 3.0;
  m.vI = vI;
  m.length = L;
  return m;
}

const double kSgvmVI = 2.0;
const double kSkewVI = 1.0 / 0.7;

PumpSpec skewed_pump(double g0) {
  std::vector<double> x, y;
  for (int i = -20; i <= 20; ++i) {
    x.push_back(0.5 * i);
    y.push_back(std::exp(-0.5 * std::pow(0.5 * i - 0.4, 2)));
  }
  return tabulated_pump(0.0, 1.0, g0, x, y, false);
}

/// Compares a route result against the generic decomposition of the same propagator.
void check_route(const BlochMessiahResult& route, const BlochMessiahResult& ref, double tol) {
  REQUIRE(route.N == ref.N);
  CHECK(max_abs(route.r - ref.r) <= tol * std::max(1.0, ref.r.maxCoeff()));
  const Eigen::Index N = ref.N;
  for (Eigen::Index k = 0; k < N; ++k) {
    const double below = k + 1 < N ? ref.r(k) - ref.r(k + 1) : 1.0;
    const double above = k > 0 ? ref.r(k - 1) - ref.r(k) : 1.0;
    if (std::min(below, above) < 1e-3 || ref.r(k) < 1e-6) continue;  // only isolated squeezers
    for (Direction d : {Direction::output, Direction::input})
      for (Beam b : {Beam::signal, Beam::idler}) {
        const double f = mode_fidelity(route.mode(d, static_cast<int>(k), b).amplitudes,
                                       ref.mode(d, static_cast<int>(k), b).amplitudes);
        CHECK(f >= 1.0 - 1e-7);
      }
  }
}

}  // namespace

TEST_CASE("reduction frames are orthogonal and symplectic") {
  for (Eigen::Index N : {1, 4, 7}) {
    for (const Matrix& T : {sgvm_transform(N), general_transform(N)}) {
      CHECK(numerics::orthogonality_residual(T) < 1e-14);
      CHECK(numerics::symplectic_residual(T) < 1e-14);
    }
    for (Regime rg : {Regime::sgvm, Regime::general}) {
      const Matrix Y = involution(rg, N);
      CHECK(max_abs(Y * Y - Matrix::Identity(2 * N, 2 * N)) < 1e-15);
      CHECK(max_abs(Y - Y.transpose()) == 0.0);
    }
  }
}

TEST_CASE("block reduction of the generator") {
  const FrequencyGrid g = build_grid(11, 0.0, 5.0);
  for (int sign : {1, -1}) {
    const Matrix Q = build_generator(build_coupled_matrices(g, gaussian_pump(0.0, 1.0, 0.6),
                                                            medium(kSgvmVI, 1.0), sign));
    const BlockReduction s = block_reduce(Q, Regime::sgvm);
    CHECK(s.offdiag_residual < 1e-14);
    CHECK(max_abs(s.involution * s.block * s.involution - s.block.transpose()) < 1e-14);
    const BlockReduction gn = block_reduce(Q, Regime::general);
    CHECK(gn.lower_residual < 1e-14);
    CHECK(max_abs(gn.involution * gn.block * gn.involution - gn.block.transpose()) < 1e-14);
  }
  const Matrix Qskew = build_generator(
      build_coupled_matrices(g, gaussian_pump(0.0, 1.0, 0.6), medium(kSkewVI, 1.0), 1));
  CHECK_THROWS_AS(block_reduce(Qskew, Regime::sgvm), RegimeError);
  CHECK_NOTHROW(block_reduce(Qskew, Regime::general));
  const Matrix Qasym =
      build_generator(build_coupled_matrices(g, skewed_pump(0.6), medium(kSkewVI, 1.0), 1));
  CHECK_THROWS_AS(block_reduce(Qasym, Regime::general), RegimeError);

  Regime rg;
  CHECK(detect_regime(medium(kSgvmVI, 1), gaussian_pump(0, 1, 1), rg));
  CHECK(rg == Regime::sgvm);
  CHECK(detect_regime(medium(kSkewVI, 1), gaussian_pump(0, 1, 1), rg));
  CHECK(rg == Regime::general);
  CHECK_FALSE(detect_regime(medium(kSkewVI, 1), skewed_pump(1), rg));
}

TEST_CASE("reduced product expands to the full propagator") {
  const FrequencyGrid g = build_grid(9, 0.0, 5.0);
  const PumpSpec pump = gaussian_pump(0.0, 1.0, 0.8);
  struct Case {
    MediumSpec m;
    Regime rg;
  };
  for (const Case& c : {Case{medium(kSgvmVI, 3.0), Regime::sgvm},
                        Case{medium(kSkewVI, 3.0), Regime::general}}) {
    for (const Poling& pol : {unpoled(3.0), qpm_poling(3.0, 0.4)}) {
      const ReducedProduct rp = reduced_product(c.m, pump, g, pol, c.rg);
      ComposeOptions full;
      full.force_full = true;
      const Matrix S = compose(c.m, pump, g, pol, full).S;
      CHECK(max_abs(expand_reduced(rp.transform, rp.K) - S) <= 1e-10 * max_abs(S));
      const ReducedProduct fast = reduced_product(c.m, pump, g, pol, c.rg, true);
      CHECK(max_abs(fast.K - rp.K) <= 1e-10 * max_abs(rp.K));
    }
  }
  CHECK_THROWS_AS(reduced_product(medium(kSkewVI, 1), pump, g, unpoled(1), Regime::sgvm), RegimeError);
}

TEST_CASE("symmetrized eigen route matches the generic decomposition") {
  const FrequencyGrid g = build_grid(13, 0.0, 5.0);
  const PumpSpec pump = gaussian_pump(0.0, 1.0, 0.9);
  for (bool rfp : {false, true}) {
    RouteOptions ro;
    ro.remove_free_phase = rfp;
    for (const Poling& pol : {unpoled(2.0), qpm_poling(2.0, 0.3),
                              apodized_poling(2.0, 0.05, PmfTarget{PmfTarget::Kind::gaussian, 2.0})}) {
      const MediumSpec m = medium(kSgvmVI, 2.0);
      const BlochMessiahResult ref = decompose(compose(m, pump, g, pol), rfp);
      check_route(symmetrized_eig_route(m, pump, g, pol, Regime::sgvm, ro), ref, 1e-8);
      const MediumSpec mk = medium(kSkewVI, 2.0);
      const BlochMessiahResult refk = decompose(compose(mk, pump, g, pol), rfp);
      check_route(symmetrized_eig_route(mk, pump, g, pol, Regime::general, ro), refk, 1e-8);
    }
  }
  Poling lopsided;
  lopsided.domains = {{0.7, 1}, {1.3, -1}};
  CHECK_THROWS_AS(symmetrized_eig_route(medium(kSgvmVI, 2.0), pump, g, lopsided, Regime::sgvm),
                  RegimeError);
}

TEST_CASE("svd route matches the generic decomposition") {
  const FrequencyGrid g = build_grid(13, 0.0, 5.0);
  const PumpSpec pump = gaussian_pump(0.0, 1.0, 0.7);
  const MediumSpec m = medium(kSgvmVI, 2.0);
  const Poling apod = apodized_poling(2.0, 0.05, PmfTarget{PmfTarget::Kind::gaussian, 2.0});
  for (bool rfp : {false, true}) {
    RouteOptions ro;
    ro.remove_free_phase = rfp;
    for (const Poling& pol : {unpoled(2.0), apod}) {
      check_route(svd_route(m, pump, g, pol, Pass::single, 1.0, ro),
                  decompose(compose(m, pump, g, pol), rfp), 1e-8);
      for (double gain2 : {1.0, 1.3})
        check_route(svd_route(m, pump, g, pol, Pass::double_pass, gain2, ro),
                    decompose(double_pass(m, pump, g, pol, gain2), rfp), 1e-8);
    }
  }
  CHECK_THROWS_AS(svd_route(medium(kSkewVI, 2.0), pump, g, apod, Pass::single), RegimeError);
}

TEST_CASE("structure checks on symmetric configurations") {
  const FrequencyGrid g = build_grid(15, 0.0, 5.0);
  for (double vI : {kSgvmVI, kSkewVI}) {
    const StructureReport rep =
        structure_checks(medium(vI, 2.0), gaussian_pump(0.0, 1.0, 0.8), g, qpm_poling(2.0, 0.3));
    for (const auto& c : rep.checks) {
      INFO(c.name, " = ", c.value);
      CHECK((c.pass || !c.hard));
    }
    CHECK(rep.all_hard_pass());
    CHECK(rep.centrosymmetric_pump);
    if (vI == kSgvmVI) {
      CHECK(rep.flip_symmetric == g.N);
      CHECK(rep.flip_antisymmetric == g.N);
    }
    CHECK(rep.find("generator.hamiltonian") != nullptr);
    CHECK(rep.find("no.such.check") == nullptr);
    CHECK(to_json(rep)["checks"].size() == rep.checks.size());
  }
  const StructureReport skew =
      structure_checks(medium(kSgvmVI, 2.0), skewed_pump(0.8), g, unpoled(2.0));
  CHECK_FALSE(skew.centrosymmetric_pump);
  CHECK(skew.all_hard_pass());
}

TEST_CASE("flip classes of a centrosymmetric matrix") {
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = gen::uniform_int(2, 10);
    const Matrix J = flip_2n(n);
    Matrix A = gen::symmetric(2 * n);
    A = 0.5 * (A + J * A * J);
    int s = 0, a = 0;
    const double parity = count_flip_classes(A, s, a);
    CHECK(parity < 1e-10);
    CHECK(s == n);
    CHECK(a == n);
  }
  // fully degenerate cluster: J itself still splits evenly
  int s = 0, a = 0;
  count_flip_classes(Matrix::Identity(6, 6), s, a);
  CHECK(s == 3);
  CHECK(a == 3);
}
