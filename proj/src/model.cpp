#include "twinbeam/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "twinbeam/errors.hpp"

namespace twinbeam {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

double interp_table(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.empty() || x < xs.front() || x > xs.back()) return 0.0;
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  if (hi == 0) return ys.front();
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

double FrequencyGrid::detuning(int n) const {
  // integer numerator keeps the mirror relation exact
  const long long num = 2LL * n - (N - 1);
  return half_width * static_cast<double>(num) / static_cast<double>(N - 1);
}

Vector FrequencyGrid::detunings() const {
  Vector d(N);
  for (int n = 0; n < N; ++n) d(n) = detuning(n);
  return d;
}

FrequencyGrid build_grid(int N, double center, double half_width) {
  if (N < 3) throw ConfigError("grid: N must be at least 3");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw ConfigError("grid: half_width must be positive");
  if (!std::isfinite(center)) throw ConfigError("grid: center must be finite");
  FrequencyGrid g;
  g.N = N;
  g.center = center;
  g.half_width = half_width;
  return g;
}

double default_half_width(double sigma, double kappa, double length) {
  const double wo = std::abs(kappa) * sigma * length;
  return 5.0 * sigma * (wo > 0.0 ? std::max(1.0, 1.0 / wo) : 1.0);
}

PumpSpec gaussian_pump(double center, double sigma, double g0) {
  if (!(sigma > 0.0)) throw ConfigError("pump: sigma must be positive");
  if (!std::isfinite(g0)) throw ConfigError("pump: g0 must be finite");
  PumpSpec p;
  p.center = center;
  p.sigma = sigma;
  p.g0 = g0;
  p.envelope = Envelope::gaussian;
  p.frequency_symmetric = true;
  return p;
}

PumpSpec tabulated_pump(double center, double sigma, double g0, std::vector<double> offsets,
                        std::vector<double> values, bool frequency_symmetric) {
  if (!(sigma > 0.0)) throw ConfigError("pump: sigma must be positive");
  if (offsets.size() != values.size() || offsets.size() < 2)
    throw ConfigError("pump: tabulated envelope needs matching offsets/values (>= 2 samples)");
  for (std::size_t i = 1; i < offsets.size(); ++i)
    if (!(offsets[i] > offsets[i - 1]))
      throw ConfigError("pump: tabulated offsets must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("pump: tabulated values must be finite");

  double vmax = 0.0, asym = 0.0;
  for (double v : values) vmax = std::max(vmax, std::abs(v));
  for (double x : offsets)
    asym = std::max(asym, std::abs(interp_table(offsets, values, x) -
                                   interp_table(offsets, values, -x)));
  const bool symmetric = asym <= 1e-12 * std::max(vmax, 1e-300);
  if (symmetric != frequency_symmetric)
    throw ConfigError(std::string("pump: frequency_symmetric flag is ") +
                      (frequency_symmetric ? "true" : "false") +
                      " but the samples say otherwise");
  PumpSpec p;
  p.center = center;
  p.sigma = sigma;
  p.g0 = g0;
  p.envelope = Envelope::tabulated;
  p.offsets = std::move(offsets);
  p.values = std::move(values);
  p.frequency_symmetric = frequency_symmetric;
  return p;
}

double pump_envelope_at_offset(const PumpSpec& pump, double x) {
  if (pump.envelope == Envelope::gaussian) {
    const double s = pump.sigma;
    return pump.g0 * std::pow(kPi * s * s, -0.25) * std::exp(-x * x / (2.0 * s * s));
  }
  return pump.g0 * interp_table(pump.offsets, pump.values, x);
}

double pump_amplitude(const PumpSpec& pump, double omega_sum) {
  return pump_envelope_at_offset(pump, omega_sum - pump.center);
}

bool MediumSpec::sgvm() const {
  const double ks = kappa_S(), ki = kappa_I();
  return std::abs(ks + ki) <= 1e-12 * std::max(std::abs(ks), std::abs(ki));
}

void validate(const MediumSpec& m) {
  if (!(m.vP > 0.0 && m.vS > 0.0 && m.vI > 0.0))
    throw ConfigError("medium: group velocities must be positive");
  if (!(m.length > 0.0) || !std::isfinite(m.length))
    throw ConfigError("medium: length must be positive");
}

double Poling::length() const {
  double s = 0.0;
  for (const auto& d : domains) s += d.width;
  return s;
}

Poling Poling::reversed() const {
  Poling p;
  p.domains.assign(domains.rbegin(), domains.rend());
  return p;
}

bool Poling::palindromic() const {
  const std::size_t n = domains.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const auto& a = domains[i];
    const auto& b = domains[n - 1 - i];
    if (a.sign != b.sign || !close_rel(a.width, b.width, 1e-12)) return false;
  }
  return true;
}

bool Poling::qpm_pattern(double rel_tol) const {
  const std::size_t n = domains.size();
  if (n < 3 || n % 2 == 0) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (domains[i].sign != (i % 2 == 0 ? 1 : -1)) return false;
  if (!close_rel(domains.front().width, domains.back().width, rel_tol)) return false;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (!close_rel(domains[i].width, domains[1].width, rel_tol)) return false;
  return true;
}

void validate(const Poling& poling, double length) {
  if (poling.domains.empty()) throw ConfigError("poling: no domains");
  for (const auto& d : poling.domains) {
    if (!(d.width > 0.0) || !std::isfinite(d.width))
      throw ConfigError("poling: domain widths must be positive");
    if (d.sign < -1 || d.sign > 1) throw ConfigError("poling: signs must be -1, 0 or 1");
  }
  const double total = poling.length();
  if (std::abs(total - length) > 1e-12 * length)
    throw ConfigError("poling: widths sum to " + std::to_string(total) +
                      " but the medium length is " + std::to_string(length));
}

Poling unpoled(double length) {
  if (!(length > 0.0)) throw ConfigError("poling: length must be positive");
  return Poling{{Domain{length, 1}}};
}

Poling qpm_poling(double length, double period) {
  if (!(period > 0.0)) throw ConfigError("qpm: period must be positive");
  if (length < period) throw ConfigError("qpm: length shorter than one period");
  const double w = 0.5 * period;
  // odd count closest to L/w; the mismatch is split evenly over the two end
  // domains, so the sequence stays palindromic and the ends lie in [w/2, 3w/2]
  const long long n = 2 * std::llround(0.5 * (length / w - 1.0)) + 1;
  std::vector<double> widths(static_cast<std::size_t>(n), w);
  const double trim = 0.5 * (static_cast<double>(n) * w - length);
  if (n == 1) {
    widths.front() = length;
  } else {
    widths.front() -= trim;
    widths.back() -= trim;
  }
  Poling p;
  for (std::size_t i = 0; i < widths.size(); ++i)
    p.domains.push_back({widths[i], i % 2 == 0 ? 1 : -1});
  return p;
}

Poling apodized_poling(double length, double domain_width, const PmfTarget& target,
                       double carrier) {
  if (!(length > 0.0)) throw ConfigError("apodized: length must be positive");
  if (!(domain_width > 0.0) || domain_width > length)
    throw ConfigError("apodized: domain_width must be in (0, L]");
  long long nz = std::llround(length / domain_width);
  nz = std::max(nz, 1LL);
  const double w = length / static_cast<double>(nz);

  using cd = std::complex<double>;
  auto domain_integral = [&](double a) -> cd {
    if (carrier == 0.0) return cd(w, 0.0);
    const cd i(0.0, 1.0);
    return (std::exp(i * carrier * (a + w)) - std::exp(i * carrier * a)) / (i * carrier);
  };
  const cd first = domain_integral(0.0);
  const double rate = std::abs(first) / w;
  if (rate < 1e-12) throw ConfigError("apodized: carrier makes every domain integral vanish");
  const double theta0 = std::arg(first);

  std::function<double(double)> cumulative;
  if (target.kind == PmfTarget::Kind::constant) {
    cumulative = [rate](double z) { return rate * z; };
  } else {
    if (!(target.width > 0.0) || !std::isfinite(target.width))
      throw ConfigError("apodized: pmf_width must be positive");
    const double sz = 1.0 / target.width;
    const double zc = 0.5 * length;
    const double amp = rate * sz * std::sqrt(kPi / 2.0);
    const double r2 = std::sqrt(2.0) * sz;
    cumulative = [=](double z) { return amp * (std::erf((z - zc) / r2) + std::erf(zc / r2)); };
  }
  if (!(std::abs(cumulative(length)) > 0.0))
    throw ConfigError("apodized: target profile is identically zero");

  const cd phase = std::polar(1.0, theta0);
  const long long half = (nz + 1) / 2;
  std::vector<int> signs;
  signs.reserve(static_cast<std::size_t>(nz));
  cd acc(0.0, 0.0);
  for (long long p = 0; p < half; ++p) {
    const double a = static_cast<double>(p) * w;
    const cd ip = domain_integral(a);
    const cd t = cumulative(a + w) * phase;
    const double plus = std::abs(acc + ip - t);
    const double minus = std::abs(acc - ip - t);
    const int s = plus <= minus ? 1 : -1;
    signs.push_back(s);
    acc += static_cast<double>(s) * ip;
  }
  for (long long p = nz - half - 1; p >= 0; --p) signs.push_back(signs[static_cast<std::size_t>(p)]);

  Poling pol;
  for (int s : signs) pol.domains.push_back({w, s});
  return pol;
}

std::complex<double> pmf(const Poling& poling, double dk) {
  using cd = std::complex<double>;
  cd sum(0.0, 0.0);
  double z = 0.0;
  for (const auto& d : poling.domains) {
    if (d.sign != 0) {
      const double x = 0.5 * dk * d.width;
      const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
      sum += static_cast<double>(d.sign) * std::polar(d.width * sinc, dk * (z + 0.5 * d.width));
    }
    z += d.width;
  }
  return sum / poling.length();
}

double gaussian_pmf_target(const Poling& poling, double pmf_width, double carrier, double dk) {
  if (poling.domains.empty() || !(pmf_width > 0.0))
    throw ConfigError("gaussian_pmf_target: needs domains and a positive width");
  const double w = poling.domains.front().width;
  const double x = 0.5 * carrier * w;
  const double rate = std::abs(x) < 1e-12 ? 1.0 : std::abs(std::sin(x) / x);
  const double sz = 1.0 / pmf_width;
  const double q = dk - carrier;
  return rate * sz * std::sqrt(2.0 * kPi) / poling.length() * std::exp(-0.5 * q * q * sz * sz);
}

double pmf_relative_l2_error(const Poling& poling, double pmf_width, double carrier, int points) {
  if (points < 2) throw ConfigError("pmf_relative_l2_error: need at least 2 points");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < points; ++i) {
    const double dk = carrier + pmf_width * (-5.0 + 10.0 * i / (points - 1));
    const double t = gaussian_pmf_target(poling, pmf_width, carrier, dk);
    const double e = std::abs(pmf(poling, dk)) - t;
    num += e * e;
    den += t * t;
  }
  return std::sqrt(num / den);
}

void write_poling(std::ostream& os, const Poling& poling) {
  os << std::setprecision(17);
  for (const auto& d : poling.domains) os << d.width << ' ' << d.sign << '\n';
}

Poling read_poling(std::istream& is) {
  Poling p;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double w;
    int s;
    std::string extra;
    if (!(ls >> w >> s) || (ls >> extra))
      throw ConfigError("poling file line " + std::to_string(lineno) + ": expected `width sign`");
    if (!(w > 0.0) || !std::isfinite(w))
      throw ConfigError("poling file line " + std::to_string(lineno) + ": width must be positive");
    if (s < -1 || s > 1)
      throw ConfigError("poling file line " + std::to_string(lineno) + ": sign must be -1, 0 or 1");
    p.domains.push_back({w, s});
  }
  if (p.domains.empty()) throw ConfigError("poling file: no domains");
  return p;
}

void save_poling(const std::string& path, const Poling& poling) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write poling file " + path);
  write_poling(f, poling);
}

Poling load_poling(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read poling file " + path);
  return read_poling(f);
}

CoupledMatrices build_coupled_matrices(const FrequencyGrid& grid, const PumpSpec& pump,
                                       const MediumSpec& medium, int sign) {
  if (sign < -1 || sign > 1) throw ConfigError("coupled matrices: sign must be -1, 0 or 1");
  const double expect = 2.0 * grid.center;
  if (std::abs(pump.center - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
    throw ConfigError("pump center must equal twice the grid center");
  const int N = grid.N;
  const Vector d = grid.detunings();
  CoupledMatrices m;
  m.sign = sign;
  m.G = (medium.kappa_S() * d).asDiagonal();
  m.H = (medium.kappa_I() * d).asDiagonal();
  m.F = Matrix::Zero(N, N);
  if (sign != 0) {
    const double pref = sign * grid.spacing() / std::sqrt(2.0 * kPi);
    for (int n = 0; n < N; ++n)
      for (int k = n; k < N; ++k) {
        // offsets from the pump center, so that mirrored pairs see identical arguments
        const double v = pref * pump_envelope_at_offset(pump, d(n) + d(k));
        m.F(n, k) = v;
        m.F(k, n) = v;
      }
  }
  return m;
}

Matrix build_generator(const CoupledMatrices& m) {
  const Eigen::Index N = m.G.rows();
  Matrix q = Matrix::Zero(4 * N, 4 * N);
  q.block(0, 2 * N, N, N) = -m.G;
  q.block(0, 3 * N, N, N) = m.F;
  q.block(N, 2 * N, N, N) = m.F;
  q.block(N, 3 * N, N, N) = -m.H;
  q.block(2 * N, 0, N, N) = m.G;
  q.block(2 * N, N, N, N) = m.F;
  q.block(3 * N, 0, N, N) = m.F;
  q.block(3 * N, N, N, N) = m.H;
  return q;
}

Matrix flip_2n(Eigen::Index n) {
  Matrix j2 = Matrix::Zero(2 * n, 2 * n);
  const Matrix j = numerics::exchange(n);
  j2.topRightCorner(n, n) = j;
  j2.bottomLeftCorner(n, n) = j;
  return j2;
}

}  // namespace twinbeam
