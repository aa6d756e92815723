#include "twinbeam/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "twinbeam/analytic.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/propagator.hpp"
#include "twinbeam/svg.hpp"

namespace twinbeam {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void say(const CommandContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  return f;
}

void write_json(const std::string& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

Propagator build_propagator(const RunConfig& cfg, const Setup& s, double g0) {
  return cfg.double_pass ? double_pass_propagator(s, g0, cfg.gain2_scale)
                         : single_pass_propagator(s, g0);
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Fidelity between input and output mode of one beam, or "passive".
json fidelity_entry(const BlochMessiahResult& bm, int k, Beam b) {
  const SchmidtMode& in = bm.mode(Direction::input, k, b);
  const SchmidtMode& out = bm.mode(Direction::output, k, b);
  if (in.passive || out.passive) return "passive";
  return mode_fidelity(in, out);
}

json flip_entry(const BlochMessiahResult& bm, int k, Beam b) {
  const SchmidtMode& in = bm.mode(Direction::input, k, b);
  const SchmidtMode& out = bm.mode(Direction::output, k, b);
  if (in.passive || out.passive) return "passive";
  return flip_overlap(in, out);
}

Check make_check(std::string name, double value, double tol, bool hard = true,
                 std::string note = {}) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tol;
  c.pass = std::isfinite(value) && value <= tol;
  c.hard = hard;
  c.note = std::move(note);
  return c;
}

double relative(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

struct RouteComparison {
  double r_diff = 0.0;
  double min_overlap = 1.0;
  int compared = 0;
};

/// r spectra and mode overlaps for squeezers that are active and spectrally isolated.
RouteComparison compare_routes(const BlochMessiahResult& a, const BlochMessiahResult& b) {
  RouteComparison c;
  const Eigen::Index n = std::min(a.r.size(), b.r.size());
  for (Eigen::Index k = 0; k < n; ++k) c.r_diff = std::max(c.r_diff, std::abs(a.r(k) - b.r(k)));
  for (Eigen::Index k = 0; k < n; ++k) {
    if (a.r(k) <= 1e-6) continue;
    const bool isolated = (k == 0 || std::abs(a.r(k - 1) - a.r(k)) > 1e-6) &&
                          (k + 1 == n || std::abs(a.r(k + 1) - a.r(k)) > 1e-6);
    if (!isolated) continue;
    for (Direction d : {Direction::input, Direction::output})
      for (Beam beam : {Beam::signal, Beam::idler}) {
        const int kk = static_cast<int>(k);
        c.min_overlap =
            std::min(c.min_overlap, mode_fidelity(a.mode(d, kk, beam), b.mode(d, kk, beam)));
      }
    ++c.compared;
  }
  return c;
}

void add_route_checks(std::vector<Check>& checks, const std::string& route,
                      const BlochMessiahResult& generic, const BlochMessiahResult& analytic,
                      const Tolerances& tol) {
  const RouteComparison c = compare_routes(generic, analytic);
  checks.push_back(make_check("route." + route + ".r", c.r_diff, tol.route_r));
  checks.push_back(make_check("route." + route + ".overlap", 1.0 - c.min_overlap,
                              tol.route_overlap, true,
                              std::to_string(c.compared) + " isolated active squeezers compared"));
}

Check failed_check(const std::string& name, const std::exception& e) {
  Check c;
  c.name = name;
  c.value = std::numeric_limits<double>::infinity();
  c.pass = false;
  c.note = e.what();
  return c;
}

}  // namespace

std::string prepare_output_dir(const RunConfig& cfg, const CommandContext& ctx) {
  const std::string dir = ctx.out_dir.value_or(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir);
  return dir;
}

void enforce_regime(const RunConfig& cfg, const Setup& s) {
  if (!cfg.assert_regime) return;
  const CoupledMatrices m = build_coupled_matrices(s.grid, s.pump, s.medium, +1);
  block_reduce(build_generator(m), *cfg.assert_regime);
}

json cmd_simulate(const RunConfig& cfg, const CommandContext& ctx) {
  Setup s = make_setup(cfg);
  enforce_regime(cfg, s);
  const std::string dir = prepare_output_dir(cfg, ctx);
  const double g0 = resolve_g0(cfg, s);
  s.pump.g0 = g0;
  say(ctx, "g0 = " + std::to_string(g0));

  const Propagator p = build_propagator(cfg, s, g0);
  const BlochMessiahResult bm = decompose(p, cfg.remove_free_phase, s.bm);
  const Matrix S_eff = cfg.remove_free_phase ? remove_free_phase_of(p) : p.S;
  const Residuals res = residuals(bm, S_eff);
  const PhotonNumbers n = photon_numbers(p.S);
  const double sym = numerics::symplectic_residual(p.S);

  json modes = json::array();
  for (int k = 0; k < static_cast<int>(bm.r.size()); ++k) {
    json e;
    e["k"] = k + 1;
    e["r"] = bm.r(k);
    e["passive"] = bm.mode(Direction::output, k, Beam::signal).passive;
    e["fidelity_signal"] = fidelity_entry(bm, k, Beam::signal);
    e["fidelity_idler"] = fidelity_entry(bm, k, Beam::idler);
    e["flip_overlap_signal"] = flip_entry(bm, k, Beam::signal);
    modes.push_back(e);
  }

  json summary;
  summary["N"] = cfg.N;
  summary["pass_mode"] = cfg.double_pass ? "double" : "single";
  summary["gain2_scale"] = cfg.double_pass ? cfg.gain2_scale : 1.0;
  summary["g0"] = g0;
  summary["mean_NS"] = n.signal;
  summary["mean_NI"] = n.idler;
  summary["r"] = vector_json(bm.r);
  summary["symplectic_residual"] = sym;
  summary["reconstruction_residual"] = res.reconstruction;
  summary["pair_degeneracy"] = res.pair_degeneracy;
  summary["O_orthogonal_residual"] = res.O_orthogonal;
  summary["O_symplectic_residual"] = res.O_symplectic;
  summary["Ot_orthogonal_residual"] = res.Ot_orthogonal;
  summary["Ot_symplectic_residual"] = res.Ot_symplectic;
  summary["remove_free_phase"] = cfg.remove_free_phase;
  summary["fidelity_k1"] = modes.empty() ? json("passive") : modes[0]["fidelity_signal"];
  summary["flip_overlap_k1"] = modes.empty() ? json("passive") : modes[0]["flip_overlap_signal"];
  summary["modes"] = modes;

  write_json(dir + "/summary.json", summary);
  {
    auto f = open_out(dir + "/modes.csv");
    write_modes_csv(f, bm, p.grid);
  }
  {
    const Vector d = p.grid.detunings();
    const std::vector<double> x(d.data(), d.data() + d.size());
    std::vector<Plot> panels;
    for (Beam b : {Beam::signal, Beam::idler}) {
      Plot plot{std::string("k = 1 ") + to_string(b) + " mode", "detuning", "|u|", {}};
      for (Direction dir_ : {Direction::input, Direction::output}) {
        const CVector& u = bm.mode(dir_, 0, b).amplitudes;
        Series ser{to_string(dir_), x, {}};
        for (Eigen::Index i = 0; i < u.size(); ++i) ser.y.push_back(std::abs(u(i)));
        plot.series.push_back(std::move(ser));
      }
      panels.push_back(std::move(plot));
    }
    Plot spec{"squeezing spectrum", "k", "r_k", {}};
    Series rs{"r", {}, {}};
    for (Eigen::Index k = 0; k < bm.r.size(); ++k) {
      rs.x.push_back(static_cast<double>(k + 1));
      rs.y.push_back(bm.r(k));
    }
    spec.series.push_back(std::move(rs));
    panels.push_back(std::move(spec));
    save_svg(dir + "/modes.svg", panels);
  }
  if (cfg.save_propagator) save_matrix(dir + "/propagator.txt", p.S);

  std::vector<std::string> failures;
  auto need = [&](const char* name, double value, double tol) {
    if (!(value <= tol)) failures.push_back(std::string(name) + " = " + std::to_string(value));
  };
  const double scale = std::max(1.0, numerics::max_abs(p.S));
  need("symplectic_residual", sym / (scale * scale), cfg.tol.symplectic);
  need("reconstruction_residual", res.reconstruction, cfg.tol.reconstruction);
  need("pair_degeneracy", res.pair_degeneracy, cfg.tol.pair_degeneracy);
  need("O_orthogonal_residual", res.O_orthogonal, cfg.tol.factor);
  need("O_symplectic_residual", res.O_symplectic, cfg.tol.factor);
  need("Ot_orthogonal_residual", res.Ot_orthogonal, cfg.tol.factor);
  need("Ot_symplectic_residual", res.Ot_symplectic, cfg.tol.factor);
  need("photon_balance", relative(n.signal, n.idler), cfg.tol.photon_balance);
  if (!failures.empty()) {
    std::string msg = "simulate: residuals above tolerance:";
    for (const auto& f : failures) msg += " " + f;
    throw ContractViolation(msg);
  }
  say(ctx, "mean_NS = " + std::to_string(n.signal) + ", r1 = " +
               (bm.r.size() ? std::to_string(bm.r(0)) : std::string("-")));
  return summary;
}

SweepResult cmd_sweep_gain(const RunConfig& cfg, const CommandContext& ctx) {
  if (!cfg.double_pass) throw ConfigError("sweep-gain: pass_mode must be double");
  Setup s = make_setup(cfg);
  enforce_regime(cfg, s);
  const std::string dir = prepare_output_dir(cfg, ctx);
  double base;
  if (cfg.target_NS) {
    base = *cfg.target_NS;
  } else {
    base = photon_numbers(double_pass_propagator(s, *cfg.g0, 1.0).S).signal;
  }
  SweepOptions opts;
  opts.points = cfg.sweep.points;
  opts.ns_range = cfg.sweep.ns_range;
  opts.scale_range = cfg.sweep.scale_range;
  opts.tune_tol = cfg.tol.tune;
  opts.jobs = ctx.jobs;
  const SweepResult r = gain_variation_sweep(s, base, opts);
  {
    auto f = open_out(dir + "/sweep.csv");
    write_sweep_csv(f, r);
  }
  Plot plot{"first-mode fidelity vs signal photon number", "<N_S>", "fidelity", {}};
  Series ser{"fidelity_k1", {}, {}};
  double min_fid = 1.0;
  for (const auto& pt : r.points) {
    ser.x.push_back(pt.mean_NS);
    ser.y.push_back(pt.fidelity_k1);
    min_fid = std::min(min_fid, pt.fidelity_k1);
  }
  plot.series.push_back(std::move(ser));
  save_svg(dir + "/sweep.svg", {plot});
  say(ctx, "g0 = " + std::to_string(r.g0) + ", min fidelity_k1 = " + std::to_string(min_fid));
  return r;
}

json cmd_verify(const RunConfig& cfg, const CommandContext& ctx) {
  Setup s = make_setup(cfg);
  const std::string dir = prepare_output_dir(cfg, ctx);
  const Tolerances& tol = cfg.tol;
  std::vector<Check> checks;

  if (cfg.assert_regime) {
    const std::string name = std::string("regime.") + to_string(*cfg.assert_regime);
    try {
      enforce_regime(cfg, s);
      checks.push_back(make_check(name, 0.0, 0.0));
    } catch (const RegimeError& e) {
      Check c = failed_check(name, e);
      c.value = e.residual();
      checks.push_back(c);
    }
  }

  const double g0 = resolve_g0(cfg, s);
  s.pump.g0 = g0;
  Propagator p = build_propagator(cfg, s, g0);
  if (!cfg.propagator_file.empty()) {
    const Matrix loaded = load_matrix(resolve_path(cfg, cfg.propagator_file));
    if (loaded.rows() != p.S.rows() || loaded.cols() != p.S.cols())
      throw ConfigError("propagator_file: expected a " + std::to_string(p.S.rows()) + " square matrix");
    const double diff = numerics::max_abs(loaded - p.S) / std::max(1.0, numerics::max_abs(p.S));
    checks.push_back(make_check("propagator_file.match", diff, tol.reconstruction, false,
                                "loaded propagator vs recomputed"));
    p.S = loaded;
  }

  const double scale = std::max(1.0, numerics::max_abs(p.S));
  checks.push_back(make_check("propagator.symplectic",
                              numerics::symplectic_residual(p.S) / (scale * scale),
                              tol.symplectic));
  checks.push_back(make_check("propagator.determinant", std::abs(p.S.determinant() - 1.0),
                              tol.determinant));

  const PhotonNumbers n = photon_numbers(p.S);
  checks.push_back(make_check("photons.balance", relative(n.signal, n.idler), tol.photon_balance));
  const double trace_n = trace_photon_number(p.S);
  checks.push_back(make_check("photons.trace_identity", relative(trace_n, 0.5 * (n.signal + n.idler)),
                              tol.photon_balance));

  std::optional<BlochMessiahResult> generic;
  try {
    generic = decompose(p, cfg.remove_free_phase, s.bm);
  } catch (const std::exception& e) {
    checks.push_back(failed_check("bm.decomposition", e));
  }
  if (generic) {
    const Matrix S_eff = cfg.remove_free_phase ? remove_free_phase_of(p) : p.S;
    const Residuals res = residuals(*generic, S_eff);
    checks.push_back(make_check("bm.reconstruction", res.reconstruction, tol.reconstruction));
    checks.push_back(make_check("bm.pair_degeneracy", res.pair_degeneracy, tol.pair_degeneracy));
    checks.push_back(make_check("bm.O.orthogonal", res.O_orthogonal, tol.factor));
    checks.push_back(make_check("bm.O.symplectic", res.O_symplectic, tol.factor));
    checks.push_back(make_check("bm.Ot.orthogonal", res.Ot_orthogonal, tol.factor));
    checks.push_back(make_check("bm.Ot.symplectic", res.Ot_symplectic, tol.factor));
    double sinh2 = 0.0;
    for (Eigen::Index k = 0; k < generic->r.size(); ++k) sinh2 += std::pow(std::sinh(generic->r(k)), 2);
    checks.push_back(make_check("photons.spectrum_sum", relative(sinh2, trace_n), tol.photon_balance));
  }

  const StructureReport structure = structure_checks(s.medium, s.pump, s.grid, s.poling);
  for (const auto& c : structure.checks) {
    Check copy = c;
    copy.name = "structure." + c.name;
    checks.push_back(copy);
  }

  Regime regime;
  if (generic && detect_regime(s.medium, s.pump, regime)) {
    RouteOptions ro;
    ro.remove_free_phase = cfg.remove_free_phase;
    ro.bm = s.bm;
    if (!cfg.double_pass && s.poling.palindromic()) {
      try {
        const auto a = symmetrized_eig_route(s.medium, s.pump, s.grid, s.poling, regime, ro);
        add_route_checks(checks, "symmetrized_eig", *generic, a, tol);
      } catch (const std::exception& e) {
        checks.push_back(failed_check("route.symmetrized_eig", e));
      }
    }
    if (regime == Regime::sgvm) {
      try {
        const auto a = svd_route(s.medium, s.pump, s.grid, s.poling,
                                 cfg.double_pass ? Pass::double_pass : Pass::single,
                                 cfg.gain2_scale, ro);
        add_route_checks(checks, "svd", *generic, a, tol);
      } catch (const std::exception& e) {
        checks.push_back(failed_check("route.svd", e));
      }
    }
  }

  const Propagator free = free_propagator(s.medium, s.grid, s.medium.length);
  checks.push_back(make_check("free.orthogonal", numerics::orthogonality_residual(free.S), tol.factor));
  checks.push_back(make_check("free.symplectic", numerics::symplectic_residual(free.S), tol.factor));

  json report;
  report["g0"] = g0;
  report["mean_NS"] = n.signal;
  report["mean_NI"] = n.idler;
  report["pass_mode"] = cfg.double_pass ? "double" : "single";
  report["centrosymmetric_pump"] = structure.centrosymmetric_pump;
  report["flip_symmetric"] = structure.flip_symmetric;
  report["flip_antisymmetric"] = structure.flip_antisymmetric;
  json arr = json::array();
  std::vector<std::string> failures;
  for (const auto& c : checks) {
    arr.push_back(to_json(c));
    if (c.hard && !c.pass) failures.push_back(c.name);
  }
  report["checks"] = arr;
  report["passed"] = failures.empty();
  write_json(dir + "/verify.json", report);

  for (const auto& c : checks) {
    char value[32];
    std::snprintf(value, sizeof value, "%.3g", c.value);
    say(ctx, std::string(c.pass ? "ok   " : (c.hard ? "FAIL " : "warn ")) + c.name + " " + value);
  }
  if (!failures.empty()) {
    std::string msg = "verify: failed checks:";
    for (const auto& f : failures) msg += " " + f;
    throw ContractViolation(msg);
  }
  return report;
}

RunConfig poling_config(const PolingArgs& a) {
  RunConfig cfg;
  if (!(a.length > 0.0)) throw ConfigError("poling: --length must be positive");
  cfg.medium.length = a.length;
  PolingConfig& p = cfg.poling;
  if (a.kind == "unpoled") {
    p.kind = PolingConfig::Kind::unpoled;
  } else if (a.kind == "qpm") {
    if (!(a.period > 0.0)) throw ConfigError("poling: qpm needs a positive --period");
    p.kind = PolingConfig::Kind::qpm;
    p.period = a.period;
  } else if (a.kind == "apodized") {
    if (!(a.domain_width > 0.0) || !(a.pmf_width > 0.0))
      throw ConfigError("poling: apodized needs positive --domain-width and --pmf-width");
    p.kind = PolingConfig::Kind::apodized;
    p.domain_width = a.domain_width;
    p.pmf_width = a.pmf_width;
    p.carrier = a.carrier;
  } else if (a.kind == "file") {
    if (a.path.empty()) throw ConfigError("poling: file needs --path");
    p.kind = PolingConfig::Kind::file;
    p.path = a.path;
  } else {
    throw ConfigError("poling: unknown kind '" + a.kind + "'");
  }
  return cfg;
}

std::string cmd_poling_gen(const RunConfig& cfg, const CommandContext& ctx) {
  const Poling pol = build_poling(cfg);
  const std::string dir = prepare_output_dir(cfg, ctx);
  const std::string path = dir + "/poling.txt";
  save_poling(path, pol);
  say(ctx, std::to_string(pol.domains.size()) + " domains written to " + path);
  return path;
}

double cmd_poling_eval(const RunConfig& cfg, const PmfEvalArgs& args, const CommandContext& ctx) {
  if (args.points < 2) throw ConfigError("poling eval: --points must be at least 2");
  const Poling pol = build_poling(cfg);
  const std::string dir = prepare_output_dir(cfg, ctx);
  const double L = cfg.medium.length;
  const PolingConfig& pc = cfg.poling;

  const bool has_target = pc.kind == PolingConfig::Kind::apodized;
  const double width =
      has_target ? pc.pmf_width.value_or(std::abs(cfg.medium.kappa_S()) * cfg.sigma) : 0.0;
  double center = 0.0;
  if (pc.kind == PolingConfig::Kind::qpm) center = 2.0 * M_PI / pc.period;
  if (has_target) center = pc.carrier;
  const double half = std::max(has_target ? 5.0 * width : 0.0, 8.0 * M_PI / L);
  const double lo = args.dk_min.value_or(center - half);
  const double hi = args.dk_max.value_or(center + half);
  if (!(hi > lo)) throw ConfigError("poling eval: empty dk range");

  auto f = open_out(dir + "/pmf.csv");
  f << (has_target ? "dk,abs,re,im,target\n" : "dk,abs,re,im\n");
  f << std::setprecision(17);
  for (int i = 0; i < args.points; ++i) {
    const double dk = lo + (hi - lo) * i / (args.points - 1);
    const std::complex<double> phi = pmf(pol, dk);
    f << dk << ',' << std::abs(phi) << ',' << phi.real() << ',' << phi.imag();
    if (has_target) f << ',' << gaussian_pmf_target(pol, width, pc.carrier, dk);
    f << '\n';
  }

  json summary;
  summary["domains"] = pol.domains.size();
  summary["length"] = pol.length();
  summary["palindromic"] = pol.palindromic();
  double err = std::numeric_limits<double>::quiet_NaN();
  if (has_target) {
    err = pmf_relative_l2_error(pol, width, pc.carrier);
    summary["relative_l2_error"] = err;
    say(ctx, "relative L2 error to Gaussian target: " + std::to_string(err));
  } else {
    summary["relative_l2_error"] = nullptr;
  }
  write_json(dir + "/pmf_summary.json", summary);
  return err;
}

}  // namespace twinbeam
