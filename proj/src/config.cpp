#include "twinbeam/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "twinbeam/errors.hpp"

namespace twinbeam {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

double positive(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0.0)) throw ConfigError(where + ": must be positive");
  return v;
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + ": expected true/false");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, where));
  return out;
}

std::pair<double, double> range(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError(where + ": expected [low, high]");
  return {v[0], v[1]};
}

void parse_grid(const json& j, RunConfig& c) {
  check_keys(j, {"N", "half_width", "center"}, "grid");
  if (!j.contains("N") || !j["N"].is_number_integer()) throw ConfigError("grid.N: expected an integer");
  c.N = j["N"].get<int>();
  if (c.N < 3) throw ConfigError("grid.N: must be at least 3");
  if (j.contains("half_width")) c.half_width = positive(j["half_width"], "grid.half_width");
  if (j.contains("center")) c.center = number(j["center"], "grid.center");
}

void parse_pump(const json& j, RunConfig& c) {
  check_keys(j, {"sigma", "g0", "target_NS", "envelope"}, "pump");
  if (j.contains("sigma")) c.sigma = positive(j["sigma"], "pump.sigma");
  if (j.contains("g0")) c.g0 = number(j["g0"], "pump.g0");
  if (j.contains("target_NS")) {
    c.target_NS = number(j["target_NS"], "pump.target_NS");
    if (*c.target_NS < 0.0) throw ConfigError("pump.target_NS: must be >= 0");
  }
  if (c.g0.has_value() == c.target_NS.has_value())
    throw ConfigError("pump: exactly one of g0 / target_NS must be given");
  if (!j.contains("envelope")) return;
  const json& e = j["envelope"];
  if (e.is_string()) {
    if (e.get<std::string>() != "gaussian") throw ConfigError("pump.envelope: unknown kind");
    c.envelope = Envelope::gaussian;
    return;
  }
  check_keys(e, {"tabulated"}, "pump.envelope");
  const json& t = e["tabulated"];
  check_keys(t, {"offsets", "values", "frequency_symmetric"}, "pump.envelope.tabulated");
  if (!t.contains("offsets") || !t.contains("values") || !t.contains("frequency_symmetric"))
    throw ConfigError("pump.envelope.tabulated: needs offsets, values, frequency_symmetric");
  c.envelope = Envelope::tabulated;
  c.table_offsets = numbers(t["offsets"], "pump.envelope.tabulated.offsets");
  c.table_values = numbers(t["values"], "pump.envelope.tabulated.values");
  c.table_symmetric = boolean(t["frequency_symmetric"], "pump.envelope.tabulated.frequency_symmetric");
}

void parse_medium(const json& j, RunConfig& c) {
  check_keys(j, {"vP", "vS", "vI", "L"}, "medium");
  for (const char* k : {"vP", "vS", "vI", "L"})
    if (!j.contains(k)) throw ConfigError(std::string("medium.") + k + ": missing");
  c.medium.vP = positive(j["vP"], "medium.vP");
  c.medium.vS = positive(j["vS"], "medium.vS");
  c.medium.vI = positive(j["vI"], "medium.vI");
  c.medium.length = positive(j["L"], "medium.L");
}

void parse_poling(const json& j, RunConfig& c) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("poling: needs a kind");
  const std::string kind = text(j["kind"], "poling.kind");
  PolingConfig& p = c.poling;
  if (kind == "unpoled") {
    check_keys(j, {"kind"}, "poling");
    p.kind = PolingConfig::Kind::unpoled;
  } else if (kind == "qpm") {
    check_keys(j, {"kind", "period"}, "poling");
    p.kind = PolingConfig::Kind::qpm;
    if (!j.contains("period")) throw ConfigError("poling.period: missing");
    p.period = positive(j["period"], "poling.period");
  } else if (kind == "apodized") {
    check_keys(j, {"kind", "domain_width", "pmf_width", "carrier"}, "poling");
    p.kind = PolingConfig::Kind::apodized;
    if (!j.contains("domain_width")) throw ConfigError("poling.domain_width: missing");
    p.domain_width = positive(j["domain_width"], "poling.domain_width");
    if (j.contains("pmf_width")) p.pmf_width = positive(j["pmf_width"], "poling.pmf_width");
    if (j.contains("carrier")) p.carrier = number(j["carrier"], "poling.carrier");
  } else if (kind == "file") {
    check_keys(j, {"kind", "path"}, "poling");
    p.kind = PolingConfig::Kind::file;
    if (!j.contains("path")) throw ConfigError("poling.path: missing");
    p.path = text(j["path"], "poling.path");
  } else {
    throw ConfigError("poling.kind: unknown kind '" + kind + "'");
  }
}

void parse_pass(const json& j, RunConfig& c) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "single") c.double_pass = false;
    else if (s == "double") c.double_pass = true;
    else throw ConfigError("pass_mode: expected single or double");
    return;
  }
  check_keys(j, {"double"}, "pass_mode");
  c.double_pass = true;
  const json& d = j["double"];
  check_keys(d, {"gain2_scale"}, "pass_mode.double");
  if (d.contains("gain2_scale")) {
    c.gain2_scale = number(d["gain2_scale"], "pass_mode.double.gain2_scale");
    if (c.gain2_scale < 0.0) throw ConfigError("pass_mode.double.gain2_scale: must be >= 0");
  }
}

void parse_tolerances(const json& j, Tolerances& t) {
  const std::pair<const char*, double*> fields[] = {
      {"symplectic", &t.symplectic},       {"reconstruction", &t.reconstruction},
      {"pair_degeneracy", &t.pair_degeneracy}, {"factor", &t.factor},
      {"photon_balance", &t.photon_balance}, {"tune", &t.tune},
      {"route_r", &t.route_r},             {"route_overlap", &t.route_overlap},
      {"determinant", &t.determinant}};
  std::set<std::string> allowed;
  for (const auto& f : fields) allowed.insert(f.first);
  check_keys(j, allowed, "options.tolerances");
  for (const auto& f : fields)
    if (j.contains(f.first)) *f.second = positive(j[f.first], std::string("options.tolerances.") + f.first);
}

void parse_options(const json& j, RunConfig& c) {
  check_keys(j,
             {"remove_free_phase", "tolerances", "output_dir", "assert_regime", "save_propagator",
              "propagator_file", "force_full", "qpm_fast_path", "sweep"},
             "options");
  if (j.contains("remove_free_phase"))
    c.remove_free_phase = boolean(j["remove_free_phase"], "options.remove_free_phase");
  if (j.contains("tolerances")) parse_tolerances(j["tolerances"], c.tol);
  if (j.contains("output_dir")) c.output_dir = text(j["output_dir"], "options.output_dir");
  if (j.contains("assert_regime")) {
    const std::string r = text(j["assert_regime"], "options.assert_regime");
    if (r == "sgvm") c.assert_regime = Regime::sgvm;
    else if (r == "general") c.assert_regime = Regime::general;
    else throw ConfigError("options.assert_regime: expected sgvm or general");
  }
  if (j.contains("save_propagator"))
    c.save_propagator = boolean(j["save_propagator"], "options.save_propagator");
  if (j.contains("propagator_file"))
    c.propagator_file = text(j["propagator_file"], "options.propagator_file");
  if (j.contains("force_full")) c.force_full = boolean(j["force_full"], "options.force_full");
  if (j.contains("qpm_fast_path"))
    c.qpm_fast_path = boolean(j["qpm_fast_path"], "options.qpm_fast_path");
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, {"points", "ns_range", "scale_range"}, "options.sweep");
    if (s.contains("points")) {
      if (!s["points"].is_number_integer() || s["points"].get<int>() < 1)
        throw ConfigError("options.sweep.points: expected a positive integer");
      c.sweep.points = s["points"].get<int>();
    }
    if (s.contains("ns_range")) c.sweep.ns_range = range(s["ns_range"], "options.sweep.ns_range");
    if (s.contains("scale_range"))
      c.sweep.scale_range = range(s["scale_range"], "options.sweep.scale_range");
  }
}

}  // namespace

RunConfig parse_config(const json& j, const std::string& base_dir) {
  check_keys(j, {"grid", "pump", "medium", "poling", "pass_mode", "options"}, "config");
  for (const char* k : {"grid", "pump", "medium", "poling"})
    if (!j.contains(k)) throw ConfigError(std::string("config: missing section '") + k + "'");
  RunConfig c;
  c.base_dir = base_dir;
  parse_grid(j["grid"], c);
  parse_pump(j["pump"], c);
  parse_medium(j["medium"], c);
  parse_poling(j["poling"], c);
  if (j.contains("pass_mode")) parse_pass(j["pass_mode"], c);
  if (j.contains("options")) parse_options(j["options"], c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  const std::filesystem::path p(path);
  return parse_config(j, p.has_parent_path() ? p.parent_path().string() : ".");
}

std::string resolve_path(const RunConfig& cfg, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || cfg.base_dir.empty()) return path;
  return (std::filesystem::path(cfg.base_dir) / p).string();
}

Poling build_poling(const RunConfig& cfg) {
  const double L = cfg.medium.length;
  const PolingConfig& p = cfg.poling;
  Poling pol;
  switch (p.kind) {
    case PolingConfig::Kind::unpoled: pol = unpoled(L); break;
    case PolingConfig::Kind::qpm: pol = qpm_poling(L, p.period); break;
    case PolingConfig::Kind::apodized: {
      const double width =
          p.pmf_width.value_or(std::abs(cfg.medium.kappa_S()) * cfg.sigma);
      if (!(width > 0.0))
        throw ConfigError("poling.pmf_width: required when the signal walk-off is zero");
      pol = apodized_poling(L, p.domain_width, PmfTarget{PmfTarget::Kind::gaussian, width},
                            p.carrier);
      break;
    }
    case PolingConfig::Kind::file: pol = load_poling(resolve_path(cfg, p.path)); break;
  }
  validate(pol, L);
  return pol;
}

Setup make_setup(const RunConfig& cfg) {
  validate(cfg.medium);
  Setup s;
  const double kappa = std::max(std::abs(cfg.medium.kappa_S()), std::abs(cfg.medium.kappa_I()));
  const double hw = cfg.half_width.value_or(default_half_width(cfg.sigma, kappa, cfg.medium.length));
  s.grid = build_grid(cfg.N, cfg.center, hw);
  const double g0 = cfg.g0.value_or(0.0);
  if (cfg.envelope == Envelope::gaussian)
    s.pump = gaussian_pump(2.0 * cfg.center, cfg.sigma, g0);
  else
    s.pump = tabulated_pump(2.0 * cfg.center, cfg.sigma, g0, cfg.table_offsets, cfg.table_values,
                            cfg.table_symmetric);
  s.medium = cfg.medium;
  s.poling = build_poling(cfg);
  s.remove_free_phase = cfg.remove_free_phase;
  s.compose.force_full = cfg.force_full;
  s.compose.qpm_fast_path = cfg.qpm_fast_path;
  return s;
}

double resolve_g0(const RunConfig& cfg, const Setup& s) {
  if (cfg.g0) return *cfg.g0;
  const double target = *cfg.target_NS;
  if (cfg.double_pass)
    return tune_gain(
        [&](double g) { return photon_numbers(double_pass_propagator(s, g, 1.0).S).signal; },
        target, cfg.tol.tune);
  return tune_gain([&](double g) { return photon_numbers(single_pass_propagator(s, g).S).signal; },
                   target, cfg.tol.tune);
}

}  // namespace twinbeam
