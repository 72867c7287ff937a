#pragma once

// Named experiments and check suites driven by a SolverConfig. Independent runs fan out over
// a small thread pool; results land in index-ordered slots so reports do not depend on the
// worker count.

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "fracschrod/config.hpp"
#include "fracschrod/diagnostics.hpp"
#include "fracschrod/fbm.hpp"
#include "fracschrod/fraccalc.hpp"
#include "fracschrod/report.hpp"
#include "fracschrod/sse.hpp"

namespace fracschrod {

/// Runs task(i) for i in [0, n) on up to `workers` threads; rethrows the lowest-index failure.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto k = static_cast<std::size_t>(std::max(1, workers));
  if (k == 1 || n <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(k, n); ++w) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Time-independent single Fourier mode e^{i k x_1} / L^{n/2} at the lattice wavenumber closest
/// to the packet's carrier.
inline TestFunction single_mode_test_function(const SolverConfig& c) {
  const Grid g = c.grid();
  const double m = std::round(c.wavenumber * c.length / (2.0 * std::numbers::pi));
  const double k = 2.0 * std::numbers::pi * m / c.length;
  const double norm = std::pow(c.length, -0.5 * c.dim);
  const WaveField w = sample_wave(g, [&](const std::array<double, 3>& x) { return norm * std::polar(1.0, k * x[0]); });
  return {[w](double) { return w; }, [g](double) { return WaveField(g); }};
}

struct GaugeGapRow {
  double dt = 0.0;
  double gap = 0.0;
  double drift_direct = 0.0;
  double drift_gauge = 0.0;
};

inline GaugeGapRow gauge_gap(const WaveField& psi0, const NoiseField& field, const SolverConfig& c, double dt) {
  const SolveOptions opts{config_hash(c)};
  const auto direct = solve_direct(psi0, field, c.nonlinearity, dt, c.horizon, opts);
  const auto gauge = solve_gauge(psi0, field, c.nonlinearity, dt, c.horizon, c.scheme, opts);
  return {dt, norm_l2(direct.back() - gauge.back()), charge_series(direct).max_drift, charge_series(gauge).max_drift};
}

inline StudyTable gauge_table(std::vector<GaugeGapRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.dt > b.dt; });
  StudyTable t{"gauge_equivalence", {"dt", "gap_L2_T", "charge_drift_direct", "charge_drift_gauge"}, {}, {}, {}, {}};
  std::vector<double> dts, gaps;
  for (const auto& r : rows) {
    t.rows.push_back({r.dt, r.gap, r.drift_direct, r.drift_gauge});
    dts.push_back(r.dt);
    gaps.push_back(r.gap);
  }
  if (rows.size() >= 3) {
    const auto order = convergence_order(dts, gaps);
    t.orders["gap_L2_T"] = order.order;
    if (order.flagged) t.flags.push_back("gap_L2_T: " + order.note);
  }
  return t;
}

inline RunReport run_single(const SolverConfig& c, const NoiseField& field) {
  RunReport report;
  report.config_hash = config_hash(c);
  const auto psi0 = initial_packet(c);
  const double dt = c.finest_dt();
  const SolveOptions opts{report.config_hash};
  const auto direct = solve_direct(psi0, field, c.nonlinearity, dt, c.horizon, opts);
  const auto gauge = solve_gauge(psi0, field, c.nonlinearity, dt, c.horizon, c.scheme, opts);
  const auto duhamel = duhamel_residual(gauge, field, c.nonlinearity, c.scheme);
  report.add_trajectory(direct);
  for (std::size_t j = 0; j < direct.size(); ++j) {
    report.rows[j].residuals["gauge_gap"] = norm_l2(direct.states[j] - gauge.states[j]);
    report.rows[j].residuals["duhamel_gauge"] = duhamel[j];
  }
  StudyTable inv{"invariants", {"value"}, {}, {}, {}, {}};
  auto add = [&](const std::string& label, double v) {
    inv.row_labels.push_back(label);
    inv.rows.push_back({v});
  };
  add("dt", dt);
  add("charge_drift_direct", charge_series(direct).max_drift);
  add("charge_drift_gauge", charge_series(gauge).max_drift);
  add("gauge_gap_T", norm_l2(direct.back() - gauge.back()));
  // the residuals below are independent; the two quadrature-based ones dominate the run time
  const bool energy = !c.nonlinearity.active();
  const LagWindow window{};
  const bool holder = direct.size() >= 8 * (std::size_t{1} << window.j_max);
  std::vector<double> extra(4, 0.0);
  parallel_for(4, c.workers, [&](std::size_t i) {
    if (i == 0) extra[0] = weak_form_residual(direct, field, c.nonlinearity, single_mode_test_function(c), c.frac);
    if (i == 1) extra[1] = classical_residual(direct, field, c.nonlinearity, c.frac);
    if (i == 2 && energy) extra[2] = energy_identity_residual(direct, field, c.nonlinearity, c.frac);
    if (i == 3 && holder) extra[3] = solution_holder(direct, c.q - 2.0, window);
  });
  add("weak_form_residual_T", extra[0]);
  add("classical_residual_T", extra[1]);
  if (energy) add("energy_identity_residual_T", extra[2]);
  if (holder) {
    add("holder_exponent_H_q-2", extra[3]);
  } else {
    report.warnings.push_back("trajectory too short for the solution Hoelder estimate (needs " +
                              std::to_string(8 * (std::size_t{1} << window.j_max)) + " snapshots)");
  }
  report.tables.push_back(std::move(inv));
  for (const auto& w : field.warnings()) report.warnings.push_back(w);
  return report;
}

inline RunReport run_gauge_equivalence(const SolverConfig& c, const NoiseField& field, bool sweep) {
  RunReport report;
  report.config_hash = config_hash(c);
  const auto psi0 = initial_packet(c);
  std::vector<double> dts = sweep ? c.dts : std::vector<double>{c.finest_dt()};
  std::vector<GaugeGapRow> rows(dts.size());
  parallel_for(dts.size(), c.workers, [&](std::size_t i) { rows[i] = gauge_gap(psi0, field, c, dts[i]); });
  report.tables.push_back(gauge_table(rows));
  report.add_trajectory(solve_direct(psi0, field, c.nonlinearity, c.finest_dt(), c.horizon, {report.config_hash}));
  return report;
}

inline RunReport run_mollification(const SolverConfig& c, const NoiseField& field) {
  RunReport report;
  report.config_hash = config_hash(c);
  const auto psi0 = initial_packet(c);
  const double dt = c.finest_dt();
  std::vector<MollificationRow> rows(c.eps.size());
  parallel_for(c.eps.size(), c.workers, [&](std::size_t i) {
    rows[i] = mollification_study(psi0, field, c.nonlinearity, dt, c.horizon, {c.eps[i]}, c.q).front();
  });
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.eps > b.eps; });
  StudyTable t{"mollification",
               {"eps", "noise_gap_sup_H_q+4", "solution_gap_L2_T", "solution_gap_L2_sup", "solution_gap_L2_rms"},
               {}, {}, {}, {}};
  for (const auto& r : rows) t.rows.push_back({r.eps, r.noise_gap, r.solution_gap, r.solution_gap_sup, r.solution_gap_rms});
  for (std::size_t k = 1; k < t.columns.size(); ++k)
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      if (t.rows[i][k] > t.rows[i - 1][k]) {
        t.flags.push_back(t.columns[k] + ": increases from eps = " + format_number(t.rows[i - 1][0]) + " to " +
                          format_number(t.rows[i][0]));
        break;
      }
  report.tables.push_back(std::move(t));
  report.add_trajectory(solve_direct(psi0, field, c.nonlinearity, dt, c.horizon, {report.config_hash}));
  return report;
}

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Riemann-Stieltjes sum with midpoint tags: sum_k f((t_k + t_{k+1})/2) (g_{k+1} - g_k).
template <class F>
double riemann_stieltjes_midpoint(F&& f, const RealFunction& g) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k)
    s += f(0.5 * (g.times[k] + g.times[k + 1])) * (g.values[k + 1] - g.values[k]);
  return s;
}

/// Stieltjes/Weyl oracle suite.
inline std::vector<CheckResult> fraccalc_checks(const SolverConfig& c) {
  std::vector<CheckResult> out;
  auto check_le = [&](std::string name, double v, double tol) { out.push_back({std::move(name), v, tol, v <= tol}); };
  const auto t = uniform_times(1.0, 4096);
  const auto f = sample_function(t, [](double s) { return s; });
  const auto g = sample_function(t, [](double s) { return s * s; });
  check_le("stieltjes_t_dt2_abs_error", std::abs(stieltjes_integral(f, g, c.frac) - 2.0 / 3.0), 1e-4);
  check_le("riemann_t_dt2_abs_error", std::abs(riemann_stieltjes_midpoint([](double s) { return s; }, g) - 2.0 / 3.0), 1e-4);

  // Weyl derivative of t: t^{1-a} / Gamma(2-a)
  const double a = c.frac.alpha;
  double worst = 0.0;
  for (double s : {0.1, 0.37, 0.8, 1.0})
    worst = std::max(worst, std::abs(weyl_left(f, a, s) - std::pow(s, 1.0 - a) / std::tgamma(2.0 - a)));
  check_le("weyl_left_linear_abs_error", worst, 1e-10);

  const auto path = sample_fbm(c.hurst, uniform_times(1.0, 4096), c.seed, FbmMethod::circulant);
  const RealFunction beta(path.times, path.values);
  auto smooth = [](double s) { return std::cos(3.0 * s) + s * s; };
  const auto fs = sample_function(path.times, smooth);
  const double quad = stieltjes_integral(fs, beta, c.frac);
  const double riem = riemann_stieltjes_midpoint(smooth, beta);
  check_le("fbm_quadrature_vs_riemann_rel", std::abs(quad - riem) / std::abs(riem), 1e-3);

  double spread = 0.0;
  std::vector<double> vals;
  for (double al : {0.30, 0.40, 0.45}) {
    FracConfig fc = c.frac;
    fc.alpha = al;
    vals.push_back(stieltjes_integral(fs, beta, fc));
  }
  for (double v : vals) spread = std::max(spread, std::abs(v - vals[1]) / std::abs(vals[1]));
  check_le("alpha_independence_rel", spread, 1e-3);

  // estimate |int f dg| <= ||f||_{a,1} Lambda_a(g) on a few randomized pairs
  double worst_ratio = 0.0;
  std::mt19937_64 rng = make_stream(c.seed, 9001);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int i = 0; i < 10; ++i) {
    const auto tt = uniform_times(1.0, 256);
    const auto bp = sample_fbm(c.hurst, tt, c.seed + 1, FbmMethod::cholesky, static_cast<std::uint64_t>(i));
    const double c0 = U(rng), c1 = U(rng), c2 = U(rng);
    const auto ff = sample_function(tt, [&](double s) { return c0 + c1 * std::sin(4 * s) + c2 * s * s; });
    const RealFunction gg(bp.times, bp.values);
    const double lhs = std::abs(stieltjes_integral(ff, gg, c.frac));
    worst_ratio = std::max(worst_ratio, lhs / (w_alpha1_norm(ff, c.frac) * lambda_alpha(gg, c.frac)));
  }
  check_le("estimate_ratio_max", worst_ratio, 1.0);
  return out;
}

/// Solver invariant suite on a small instance of the configured problem.
inline std::vector<CheckResult> invariant_checks(const SolverConfig& base) {
  SolverConfig c = base;
  c.dim = 1;
  c.points = 128;
  c.horizon = 0.25;
  c.dts = {1.0 / 256};
  c.modes = std::min<std::size_t>(c.modes, 16);
  c.decay = std::max(c.decay, min_decay(1, c.q) + 0.5);
  if (c.nonlinearity.kind == NonlinearityKind::hartree) c.nonlinearity = NonlinearitySpec::power(1.0, 1.0);
  std::vector<CheckResult> out;
  auto check_le = [&](std::string name, double v, double tol) { out.push_back({std::move(name), v, tol, v <= tol}); };
  const Grid g = c.grid();
  const auto field = config_noise(c);
  const auto psi0 = initial_packet(c);

  // free evolution: plane wave, B = 0, g = 0
  auto paths = field.paths();
  for (auto& p : paths) std::fill(p.values.begin(), p.values.end(), 0.0);
  const auto quiet = field.with_paths(paths);
  const double k = 2.0 * std::numbers::pi * 3.0 / g.length;
  const auto plane = sample_wave(g, [&](const std::array<double, 3>& x) { return std::polar(1.0, k * x[0]); });
  const auto free = solve_direct(plane, quiet, NonlinearitySpec::none(), c.dts[0], c.horizon);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    err = std::max(err, std::abs(free.back()[i] - std::polar(1.0, k * g.coordinate(i, 0) - k * k * c.horizon)));
  check_le("free_evolution_max_error", err, 1e-10);

  const auto strang = solve_gauge(psi0, field, NonlinearitySpec::none(), c.dts[0], c.horizon, Scheme::strang_gauge);
  check_le("isometry_strang_gauge", charge_series(strang).max_drift, 1e-10);
  const auto cn = solve_gauge(psi0, field, NonlinearitySpec::none(), c.dts[0], c.horizon, Scheme::crank_nicolson_mag);
  check_le("isometry_crank_nicolson_mag", charge_series(cn).max_drift, 1e-6);
  const auto direct = solve_direct(psi0, field, c.nonlinearity, c.dts[0], c.horizon);
  check_le("charge_drift_direct", charge_series(direct).max_drift, 1e-10);

  RealGrid theta(g.size());
  std::mt19937_64 rng = make_stream(c.seed, 77);
  std::uniform_real_distribution<double> U(-std::numbers::pi, std::numbers::pi);
  for (auto& v : theta) v = U(rng);
  check_le("gauge_invariance_defect", gauge_invariance_defect(psi0, theta, c.nonlinearity) / std::max(norm_l2(psi0), 1e-300), 1e-12);
  return out;
}

inline StudyTable check_table(const std::string& name, const std::vector<CheckResult>& checks) {
  StudyTable t{name, {"value", "tolerance", "pass"}, {}, {}, {}, {}};
  for (const auto& r : checks) {
    t.row_labels.push_back(r.name);
    t.rows.push_back({r.value, r.tolerance, r.pass ? 1.0 : 0.0});
  }
  return t;
}

}  // namespace fracschrod
