/**
 * @file twinbeam.cpp
 * Command-line front end. Exit codes: 0 success, 2 configuration error,
 * 3 numerical contract violation.
 */
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "twinbeam/commands.hpp"
#include "twinbeam/errors.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace twinbeam;

  CLI::App app{"Twin-beam squeezer simulation: propagators, Schmidt modes and poling design"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides options.output_dir)");
  };

  auto* simulate = app.add_subcommand("simulate", "propagator, Bloch-Messiah modes and summary");
  add_common(simulate, true);
  auto* sweep = app.add_subcommand("sweep-gain", "fidelity versus second-pass gain");
  add_common(sweep, true);
  sweep->add_option("--jobs", jobs, "worker threads for the sweep")->check(CLI::PositiveNumber);
  auto* verify = app.add_subcommand("verify", "evaluate every invariant on the configured system");
  add_common(verify, true);

  auto* poling = app.add_subcommand("poling", "poling generation and phase-matching evaluation");
  poling->require_subcommand(1);
  PolingArgs pargs;
  PmfEvalArgs eargs;
  double dk_min = 0.0, dk_max = 0.0;
  auto add_poling_args = [&](CLI::App* sub) {
    add_common(sub, false);
    sub->add_option("--kind", pargs.kind, "unpoled | qpm | apodized | file (instead of --config)");
    sub->add_option("--length", pargs.length, "crystal length");
    sub->add_option("--period", pargs.period, "QPM period");
    sub->add_option("--domain-width", pargs.domain_width, "apodized domain width");
    sub->add_option("--pmf-width", pargs.pmf_width, "Gaussian PMF target width");
    sub->add_option("--carrier", pargs.carrier, "PMF carrier wavevector");
    sub->add_option("--path", pargs.path, "domain file for kind=file");
  };
  auto* gen = poling->add_subcommand("gen", "write the domain file poling.txt");
  add_poling_args(gen);
  auto* eval = poling->add_subcommand("eval", "write pmf.csv on a phase-mismatch grid");
  add_poling_args(eval);
  auto* dkmin_opt = eval->add_option("--dk-min", dk_min, "lower end of the phase-mismatch grid");
  auto* dkmax_opt = eval->add_option("--dk-max", dk_max, "upper end of the phase-mismatch grid");
  eval->add_option("--points", eargs.points, "number of grid points")->check(CLI::Range(2, 1000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  CommandContext ctx;
  if (!out_dir.empty()) ctx.out_dir = out_dir;
  ctx.jobs = jobs;
  ctx.log = &std::cout;

  try {
    if (simulate->parsed()) {
      cmd_simulate(load_config(config_path), ctx);
    } else if (sweep->parsed()) {
      cmd_sweep_gain(load_config(config_path), ctx);
    } else if (verify->parsed()) {
      cmd_verify(load_config(config_path), ctx);
    } else {
      const bool from_args = !pargs.kind.empty();
      if (from_args == !config_path.empty())
        throw ConfigError("poling: give exactly one of --config or --kind");
      const RunConfig cfg = from_args ? poling_config(pargs) : load_config(config_path);
      if (gen->parsed()) {
        cmd_poling_gen(cfg, ctx);
      } else {
        if (*dkmin_opt) eargs.dk_min = dk_min;
        if (*dkmax_opt) eargs.dk_max = dk_max;
        cmd_poling_eval(cfg, eargs, ctx);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const DimensionError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const RegimeError& e) {
    std::cerr << "regime error: " << e.what() << '\n';
    return kNumericalExit;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalExit;
  }
  return 0;
}
