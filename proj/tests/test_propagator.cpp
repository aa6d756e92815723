#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/model.hpp"
#include "twinbeam/propagator.hpp"

using namespace twinbeam;
using numerics::max_abs;

namespace {

MediumSpec medium(double vI, double L) {
  MediumSpec m;
  m.vP = 1.0;
  m.vS = 2.0 / 3.0;
  m.vI = vI;
  m.length = L;
  return m;
}

const double kSgvmVI = 2.0;
const double kSkewVI = 1.0 / 0.7;

}  // namespace

TEST_CASE("segment propagator limits") {
  const FrequencyGrid g = build_grid(9, 0.0, 4.0);
  const MediumSpec m = medium(kSgvmVI, 2.0);
  const CoupledMatrices cm = build_coupled_matrices(g, gaussian_pump(0.0, 1.0, 0.7), m, 1);
  CHECK(max_abs(segment_propagator(g, cm, 0.0).S - Matrix::Identity(36, 36)) == 0.0);
  CHECK_THROWS_AS(segment_propagator(g, cm, -1.0), ConfigError);

  const CoupledMatrices cf = build_coupled_matrices(g, gaussian_pump(0.0, 1.0, 0.0), m, 1);
  const Propagator free = segment_propagator(g, cf, 1.7);
  Vector angles(18);
  angles << 1.7 * cf.G.diagonal(), 1.7 * cf.H.diagonal();
  CHECK(max_abs(free.S - free_rotation(angles)) < 1e-13);
}

TEST_CASE("segment propagator is symplectic for random parameters") {
  for (int trial = 0; trial < 12; ++trial) {
    const int N = 2 * gen::uniform_int(2, 30) + 1;
    const FrequencyGrid g = build_grid(N, 0.0, gen::uniform(1, 8));
    const MediumSpec m = medium(gen::uniform(0.5, 3.0), 1.0);
    const CoupledMatrices cm =
        build_coupled_matrices(g, gaussian_pump(0.0, gen::uniform(0.5, 2), gen::uniform(-2, 2)), m,
                               gen::uniform_int(0, 1) ? 1 : -1);
    const Propagator p = segment_propagator(g, cm, gen::uniform(0.01, 3.0));
    CHECK(numerics::symplectic_residual(p.S) <= 1e-10);
  }
  const FrequencyGrid big = build_grid(201, 0.0, 5.0);
  const Propagator p = segment_propagator(
      big, build_coupled_matrices(big, gaussian_pump(0.0, 1.0, 0.5), medium(kSgvmVI, 1.0), 1), 0.5);
  CHECK(numerics::symplectic_residual(p.S) <= 1e-10);
}

TEST_CASE("compose reproduces a single exponential") {
  const FrequencyGrid g = build_grid(11, 0.0, 5.0);
  for (double vI : {kSgvmVI, kSkewVI}) {
    const MediumSpec m = medium(vI, 3.0);
    const PumpSpec pump = gaussian_pump(0.0, 1.0, 0.6);
    const Matrix ref = numerics::expm(3.0 * build_generator(build_coupled_matrices(g, pump, m, 1)));
    for (bool full : {false, true}) {
      ComposeOptions o;
      o.force_full = full;
      CHECK(max_abs(compose(m, pump, g, unpoled(3.0), o).S - ref) <= 1e-12 * max_abs(ref));
      Poling two;
      two.domains = {{1.5, 1}, {1.5, 1}};
      CHECK(max_abs(compose(m, pump, g, two, o).S - ref) <= 1e-12 * max_abs(ref));
    }
  }
}

TEST_CASE("reduced and full composition agree") {
  const FrequencyGrid g = build_grid(15, 0.0, 5.0);
  for (double vI : {kSgvmVI, kSkewVI}) {
    const MediumSpec m = medium(vI, 4.0);
    Poling p;
    for (int i = 0; i < 9; ++i) p.domains.push_back({4.0 / 9, gen::uniform_int(0, 1) ? 1 : -1});
    const PumpSpec pump = gaussian_pump(0.0, 1.0, 0.9);
    ComposeOptions full;
    full.force_full = true;
    const Matrix a = compose(m, pump, g, p).S;
    const Matrix b = compose(m, pump, g, p, full).S;
    CHECK(max_abs(a - b) <= 1e-11 * max_abs(b));
  }
}

TEST_CASE("QPM caching and fast path") {
  const FrequencyGrid g = build_grid(11, 0.0, 5.0);
  const double period = 0.02;
  const MediumSpec m = medium(kSgvmVI, 1001 * period / 2);
  const Poling q = qpm_poling(m.length, period);
  REQUIRE(q.domains.size() == 1001);
  const PumpSpec pump = gaussian_pump(0.0, 1.0, 1.0);

  for (bool full : {false, true}) {
    ComposeOptions o;
    o.force_full = full;
    CacheStats stats;
    const Matrix naive = compose(m, pump, g, q, o, &stats).S;
    CHECK(stats.computed == 2);
    CHECK(stats.hits >= 999);
    CHECK(numerics::symplectic_residual(naive) <= 1e-8);
    CHECK(std::abs(naive.determinant() - 1.0) <= 1e-8);

    o.qpm_fast_path = true;
    CacheStats fast_stats;
    const Matrix fast = compose(m, pump, g, q, o, &fast_stats).S;
    CHECK(fast_stats.computed == 2);
    CHECK(max_abs(fast - naive) <= 1e-10 * std::max(1.0, max_abs(naive)));
  }

  // trimmed end domains still take the fast path
  const Poling t = qpm_poling(1.37, 0.1);
  CHECK(t.qpm_pattern());
  const MediumSpec mt = medium(kSgvmVI, 1.37);
  ComposeOptions o;
  o.qpm_fast_path = true;
  const Matrix fast = compose(mt, pump, g, t, o).S;
  const Matrix naive = compose(mt, pump, g, t).S;
  CHECK(max_abs(fast - naive) <= 1e-10 * max_abs(naive));
}

TEST_CASE("free propagator") {
  const FrequencyGrid g = build_grid(13, 0.0, 3.0);
  const MediumSpec m = medium(kSkewVI, 2.0);
  CHECK(max_abs(free_propagator(m, g, 0.0).S - Matrix::Identity(52, 52)) == 0.0);
  const Propagator f = free_propagator(m, g, 2.0);
  CHECK(numerics::orthogonality_residual(f.S) <= 1e-10);
  const numerics::Svd s = numerics::svd(f.S);
  CHECK(max_abs(s.sigma - Vector::Ones(52)) < 1e-13);
  CHECK(max_abs(f.S * free_propagator(m, g, -2.0).S - Matrix::Identity(52, 52)) < 1e-13);
  CHECK(max_abs(remove_free_phase(f).S - Matrix::Identity(52, 52)) < 1e-13);
}

TEST_CASE("double pass") {
  const FrequencyGrid g = build_grid(11, 0.0, 5.0);
  for (double vI : {kSgvmVI, kSkewVI}) {
    const MediumSpec m = medium(vI, 2.0);
    Poling p;
    p.domains = {{0.5, 1}, {0.7, -1}, {0.8, 1}};
    const Propagator zero = double_pass(m, gaussian_pump(0.0, 1.0, 0.0), g, p);
    const Matrix ref = free_propagator(m.swapped(), g, 2.0).S * free_propagator(m, g, 2.0).S;
    CHECK(max_abs(zero.S - ref) < 1e-13);

    const PumpSpec pump = gaussian_pump(0.0, 1.0, 0.8);
    const Matrix s1 = compose(m, pump, g, p).S;
    const Matrix s2 = compose(m.swapped(), pump.scaled(0.6), g, p.reversed()).S;
    const Propagator d = double_pass(m, pump, g, p, 0.6);
    CHECK(max_abs(d.S - s2 * s1) <= 1e-12 * max_abs(d.S));
    CHECK(numerics::symplectic_residual(d.S) <= 1e-9);
  }
  CHECK_THROWS_AS(double_pass(medium(2.0, 1.0), gaussian_pump(0.0, 1.0, 1.0), g, unpoled(1.0), -1.0),
                  ConfigError);
}

TEST_CASE("cache keys") {
  CHECK(make_key(0.1, 1.0, 1, 0) == make_key(0.1 + 1e-18, 1.0, 1, 0));
  CHECK_FALSE(make_key(0.1, 1.0, 1, 0) == make_key(0.1 + 1e-12, 1.0, 1, 0));
  CHECK_FALSE(make_key(0.1, 1.0, 1, 0) == make_key(0.1, 1.0, -1, 0));
  CHECK_FALSE(make_key(0.1, 1.0, 1, 0) == make_key(0.1, 1.0, 1, 1));
}

TEST_CASE("matrix file round trip") {
  const Matrix m = gen::gaussian(4, 4);
  std::stringstream ss;
  write_matrix(ss, m);
  CHECK(max_abs(read_matrix(ss) - m) == 0.0);
  std::istringstream bad("2 2\n1 2\n3 x\n");
  CHECK_THROWS_AS(read_matrix(bad), ConfigError);
  std::istringstream short_data("2 2\n1 2 3\n");
  CHECK_THROWS_AS(read_matrix(short_data), ConfigError);
  CHECK_THROWS_AS(load_matrix("/nonexistent/s.txt"), ConfigError);
}
