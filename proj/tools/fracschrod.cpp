// fracschrod: batch runner for the stochastic Schrodinger solvers.
//
//   fracschrod --config run.ini [--experiment NAME] [--seed U64] [--out DIR] [--workers K] [--dt-sweep]
//   fracschrod --check fraccalc|invariants|all [--config run.ini]
//
// Exit codes: 0 ok, 1 check failure, 2 invalid config or domain error, 3 numerical failure.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fracschrod/config.hpp"
#include "fracschrod/experiments.hpp"
#include "fracschrod/report.hpp"

using namespace fracschrod;

namespace {

int run(int argc, char** argv) {
  CLI::App app{"fracschrod: pathwise solver for the Schrodinger equation with fractional multiplicative noise"};
  std::string config_path, experiment, check, out;
  std::uint64_t seed = 0;
  int workers = 0;
  bool sweep = false;
  app.add_option("--config", config_path, "config file (ini sections: run, grid, noise, nonlinearity, initial, solver, fraccalc, mollification)")
      ->check(CLI::ExistingFile);
  auto* exp_opt = app.add_option("--experiment", experiment, "single | gauge-equivalence | fraccalc | mollification");
  app.add_option("--check", check, "run an oracle suite: fraccalc | invariants | all")
      ->check(CLI::IsMember({"fraccalc", "invariants", "all"}));
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory (overrides FRACSCHROD_OUT_DIR and the config)");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--dt-sweep", sweep, "gauge-equivalence: run every dt in the config list");
  exp_opt->excludes(app.get_option("--check"));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  SolverConfig c = config_path.empty() ? SolverConfig{} : load_config(config_path);
  if (*exp_opt) c.experiment = experiment;
  if (*seed_opt) c.seed = seed;
  if (*workers_opt) c.workers = workers;
  if (!out.empty()) {
    c.out = out;
  } else if (const char* env = std::getenv("FRACSCHROD_OUT_DIR"); env && *env) {
    c.out = env;
  }
  c.validate();

  const auto started = std::chrono::system_clock::now();
  RunReport report;
  int status = 0;
  if (!check.empty()) {
    report.config_hash = config_hash(c);
    auto add_suite = [&](const std::string& name, const std::vector<CheckResult>& results) {
      for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << name << '.' << r.name << "  value=" << format_number(r.value)
                  << "  tol=" << format_number(r.tolerance) << '\n';
        if (!r.pass) status = 1;
      }
      report.tables.push_back(check_table("check_" + name, results));
    };
    if (check == "fraccalc" || check == "all") add_suite("fraccalc", fraccalc_checks(c));
    if (check == "invariants" || check == "all") add_suite("invariants", invariant_checks(c));
  } else if (c.experiment == "fraccalc") {
    report.config_hash = config_hash(c);
    report.tables.push_back(check_table("fraccalc", fraccalc_checks(c)));
  } else {
    const NoiseField field = config_noise(c);
    if (c.experiment == "single") {
      report = run_single(c, field);
    } else if (c.experiment == "gauge-equivalence") {
      report = run_gauge_equivalence(c, field, sweep);
    } else {
      report = run_mollification(c, field);
    }
  }
  emit_report(c.out, report, c, started, std::chrono::system_clock::now());
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& t : report.tables)
    for (const auto& f : t.flags) std::cerr << "flag [" << t.name << "]: " << f << '\n';
  std::cout << "wrote " << c.out << " (config " << report.config_hash << ")\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
