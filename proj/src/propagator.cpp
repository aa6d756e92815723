#include "twinbeam/propagator.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "twinbeam/analytic.hpp"
#include "twinbeam/errors.hpp"

namespace twinbeam {

ExpKey make_key(double width, double scale, int sign, int tag) {
  const double quantum = 1e-15 * std::max(scale, 1e-300);
  return ExpKey{std::llround(width / quantum), sign, tag};
}

Propagator segment_propagator(const FrequencyGrid& grid, const CoupledMatrices& m, double dz) {
  if (!(dz >= 0.0)) throw ConfigError("segment_propagator: dz must be nonnegative");
  if (m.G.rows() != grid.N) throw DimensionError("segment_propagator: grid/matrix size mismatch");
  Propagator p;
  p.grid = grid;
  p.S = numerics::expm(dz * build_generator(m));
  p.free_angles.resize(2 * grid.N);
  p.free_angles << dz * m.G.diagonal(), dz * m.H.diagonal();
  return p;
}

Vector free_angles(const MediumSpec& medium, const FrequencyGrid& grid, double length) {
  const Vector d = grid.detunings();
  Vector th(2 * grid.N);
  th << length * medium.kappa_S() * d, length * medium.kappa_I() * d;
  return th;
}

Matrix free_rotation(const Vector& angles) {
  const Eigen::Index n = angles.size();
  Matrix r = Matrix::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = std::cos(angles(i)), s = std::sin(angles(i));
    r(i, i) = c;
    r(i, n + i) = -s;
    r(n + i, i) = s;
    r(n + i, n + i) = c;
  }
  return r;
}

Propagator free_propagator(const MediumSpec& medium, const FrequencyGrid& grid, double length) {
  Propagator p;
  p.grid = grid;
  p.free_angles = free_angles(medium, grid, length);
  p.S = free_rotation(p.free_angles);
  return p;
}

Matrix remove_free_phase_of(const Propagator& p) {
  if (p.free_angles.size() * 2 != p.S.rows())
    throw DimensionError("remove_free_phase: angle count does not match the propagator");
  const Matrix half = free_rotation(-0.5 * p.free_angles);
  return half * p.S * half;
}

Propagator remove_free_phase(const Propagator& p) {
  Propagator out;
  out.grid = p.grid;
  out.S = remove_free_phase_of(p);
  out.free_angles = Vector::Zero(p.free_angles.size());
  return out;
}

namespace {

using Cache = std::map<ExpKey, Matrix>;


Matrix compose_full(const MediumSpec& medium, const PumpSpec& pump, const FrequencyGrid& grid,
                    const Poling& poling, const ComposeOptions& opts, Cache& cache, int tag,
                    CacheStats& stats) {
  std::map<int, Matrix> generators;
  auto gen = [&](int sign) -> const Matrix& {
    auto it = generators.find(sign);
    if (it == generators.end())
      it = generators.emplace(sign, build_generator(build_coupled_matrices(grid, pump, medium, sign)))
               .first;
    return it->second;
  };
  auto exp_of = [&](const Domain& d) -> const Matrix& {
    const ExpKey key = make_key(d.width, medium.length, d.sign, tag);
    auto it = cache.find(key);
    if (it != cache.end()) {
      ++stats.hits;
      return it->second;
    }
    ++stats.computed;
    return cache.emplace(key, numerics::expm(d.width * gen(d.sign))).first->second;
  };

  const Eigen::Index dim = 4 * grid.N;
  if (opts.qpm_fast_path && poling.qpm_pattern()) return qpm_product(poling, exp_of, stats.hits);
  Matrix S = Matrix::Identity(dim, dim);
  for (const auto& d : poling.domains) S = exp_of(d) * S;
  return S;
}

Matrix compose_reduced(const MediumSpec& medium, const PumpSpec& pump, const FrequencyGrid& grid,
                       const Poling& poling, Regime regime, const ComposeOptions& opts,
                       CacheStats& stats) {
  ReducedProduct rp = reduced_product(medium, pump, grid, poling, regime, opts.qpm_fast_path);
  stats.computed += rp.exponentials;
  stats.hits += rp.cache_hits;
  return expand_reduced(rp.transform, rp.K);
}

Matrix compose_matrix(const MediumSpec& medium, const PumpSpec& pump, const FrequencyGrid& grid,
                      const Poling& poling, const ComposeOptions& opts, Cache& cache, int tag,
                      CacheStats& stats) {
  validate(medium);
  validate(poling, medium.length);
  Regime regime;
  if (!opts.force_full && detect_regime(medium, pump, regime)) {
    try {
      return compose_reduced(medium, pump, grid, poling, regime, opts, stats);
    } catch (const RegimeError&) {
      // structure not exact enough for the reduced frame; use the full generator
    }
  }
  return compose_full(medium, pump, grid, poling, opts, cache, tag, stats);
}

}  // namespace

Propagator compose(const MediumSpec& medium, const PumpSpec& pump, const FrequencyGrid& grid,
                   const Poling& poling, const ComposeOptions& opts, CacheStats* stats) {
  Cache cache;
  CacheStats local;
  Propagator p;
  p.grid = grid;
  p.S = compose_matrix(medium, pump, grid, poling, opts, cache, 0, local);
  p.free_angles = free_angles(medium, grid, poling.length());
  if (stats) {
    stats->computed += local.computed;
    stats->hits += local.hits;
  }
  return p;
}

Propagator double_pass(const MediumSpec& medium, const PumpSpec& pump, const FrequencyGrid& grid,
                       const Poling& poling, double gain2, const ComposeOptions& opts,
                       CacheStats* stats) {
  if (!std::isfinite(gain2) || gain2 < 0.0) throw ConfigError("double_pass: gain2 must be >= 0");
  Cache cache;
  CacheStats local;
  const MediumSpec back = medium.swapped();
  const Matrix s1 = compose_matrix(medium, pump, grid, poling, opts, cache, 0, local);
  const Matrix s2 =
      compose_matrix(back, pump.scaled(gain2), grid, poling.reversed(), opts, cache, 1, local);
  Propagator p;
  p.grid = grid;
  p.S = s2 * s1;
  p.free_angles = free_angles(medium, grid, poling.length()) +
                  free_angles(back, grid, poling.length());
  if (stats) {
    stats->computed += local.computed;
    stats->hits += local.hits;
  }
  return p;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

Matrix read_matrix(std::istream& is) {
  long long rows = -1, cols = -1;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0)
    throw ConfigError("matrix file: bad dimensions header");
  Matrix m(rows, cols);
  for (long long i = 0; i < rows; ++i)
    for (long long j = 0; j < cols; ++j) {
      std::string tok;
      if (!(is >> tok)) throw ConfigError("matrix file: truncated data");
      try {
        std::size_t used = 0;
        m(i, j) = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("matrix file: bad entry '" + tok + "'");
      }
    }
  std::string extra;
  if (is >> extra) throw ConfigError("matrix file: trailing data");
  return m;
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write matrix file " + path);
  write_matrix(f, m);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read matrix file " + path);
  return read_matrix(f);
}

}  // namespace twinbeam
