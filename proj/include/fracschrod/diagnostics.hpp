#pragma once

// Invariant monitors (charge, energy identity) and study harnesses (mollification,
// convergence orders) over solver trajectories, plus the RunReport they feed.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fracschrod/errors.hpp"
#include "fracschrod/fraccalc.hpp"
#include "fracschrod/qnoise.hpp"
#include "fracschrod/sse.hpp"

namespace fracschrod {

struct ChargeSeries {
  std::vector<double> norms;
  double max_drift = 0.0;  // max_t | ||Psi(t)|| - ||Psi0|| | / ||Psi0||
};

inline ChargeSeries charge_series(const Trajectory& traj) {
  if (traj.states.empty()) throw DomainError("charge_series: empty trajectory");
  ChargeSeries out;
  for (const auto& u : traj.states) out.norms.push_back(norm_l2(u));
  const double n0 = out.norms.front();
  for (double n : out.norms) out.max_drift = std::max(out.max_drift, std::abs(n - n0) / (n0 > 0.0 ? n0 : 1.0));
  return out;
}

/// Kinetic energy 1/2 ||grad Psi||^2.
inline double kinetic_energy(const WaveField& u) {
  double s = 0.0;
  for (int d = 0; d < u.grid.dim; ++d) {
    const WaveField du(u.grid, spectral_derivative(u.grid, u.values, d));
    const double n = norm_l2(du);
    s += n * n;
  }
  return 0.5 * s;
}

/// Terms of the energy identity for g = 0 at the last snapshot:
///   1/2 ||grad Psi(t)||^2 - 1/2 ||grad Psi0||^2 + Im int_0^t int conj(Psi) grad Psi . grad(dB) dx.
/// The stochastic term is sum_p lambda_p int F_p d beta_p with F_p(s) = Im int conj(Psi) grad Psi . grad e_p dx,
/// spatial quadrature inside the pathwise integral.
struct EnergyTerms {
  double kinetic_change = 0.0;
  double stochastic = 0.0;
  [[nodiscard]] double residual() const { return std::abs(kinetic_change + stochastic); }
};

inline EnergyTerms energy_identity_terms(const Trajectory& traj, const NoiseField& field, const NonlinearitySpec& spec,
                                         const FracConfig& cfg = {}) {
  traj.validate();
  if (spec.active()) throw ConfigError("energy identity residual is only defined for g = 0 runs");
  EnergyTerms out;
  out.kinetic_change = kinetic_energy(traj.back()) - kinetic_energy(traj.states.front());
  const std::size_t m = traj.size() - 1;
  if (m == 0) return out;
  const NoiseField coarse = field.subsample(traj.stride);
  const auto weights = noise_weights(coarse, cfg, 0, m);
  const Grid& g = traj.states.front().grid;
  for (std::size_t j = 0; j <= m; ++j) {
    const auto& psi = traj.states[j];
    std::vector<ComplexGrid> grad;
    for (int d = 0; d < g.dim; ++d) grad.push_back(spectral_derivative(g, psi.values, d));
    for (std::size_t p = 0; p < weights.w.size(); ++p) {
      const double c = weights.w[p][j];
      if (c == 0.0) continue;
      double f = 0.0;
      for (int d = 0; d < g.dim; ++d) {
        const auto& ge = coarse.mode_gradient(p, d);
        const auto& gp = grad[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < g.size(); ++i) f += (std::conj(psi[i]) * gp[i]).imag() * ge[i];
      }
      out.stochastic += c * f * g.cell_volume();
    }
  }
  return out;
}

inline double energy_identity_residual(const Trajectory& traj, const NoiseField& field, const NonlinearitySpec& spec,
                                       const FracConfig& cfg = {}) {
  return energy_identity_terms(traj, field, spec, cfg).residual();
}

struct MollificationRow {
  double eps = 0.0;
  double noise_gap = 0.0;     // sup_t ||B^eps - B||_{H^{q+4}}
  double solution_gap = 0.0;  // ||Psi^eps(T) - Psi(T)||_{L^2}
  double solution_gap_sup = 0.0;  // max over snapshots
  double solution_gap_rms = 0.0;  // (1/T int_0^T ||Psi^eps - Psi||^2 dt)^{1/2}, trapezoid
};

/// For each eps: mollify every mode path, solve_direct on the mollified field with the same
/// dt, and record the noise gap and the solution gaps against the unmollified run.
/// The mollified paths agree with the original ones at every knot, T included, so the terminal
/// gap only sees the accumulated effect of the interior differences.
inline std::vector<MollificationRow> mollification_study(const WaveField& psi0, const NoiseField& field,
                                                         const NonlinearitySpec& spec, double dt, double T,
                                                         const std::vector<double>& eps, int q = 0) {
  const auto ref = solve_direct(psi0, field, spec, dt, T);
  std::vector<MollificationRow> rows;
  for (double e : eps) {
    const NoiseField moll = mollify_field(field, e);
    const auto run = solve_direct(psi0, moll, spec, dt, T);
    MollificationRow row{e, field_gap_sobolev(moll, field, q + 4.0), norm_l2(run.back() - ref.back()), 0.0, 0.0};
    double acc = 0.0, prev = 0.0;
    for (std::size_t j = 0; j < run.size(); ++j) {
      const double d = norm_l2(run.states[j] - ref.states[j]);
      row.solution_gap_sup = std::max(row.solution_gap_sup, d);
      if (j > 0) acc += 0.5 * (prev * prev + d * d) * (run.times[j] - run.times[j - 1]);
      prev = d;
    }
    row.solution_gap_rms = std::sqrt(acc / T);
    rows.push_back(row);
  }
  return rows;
}

struct ConvergenceOrder {
  double order = 0.0;
  bool flagged = false;  // error column not strictly decreasing with dt
  std::string note;
};

/// Least-squares slope of log(error) against log(step).
inline ConvergenceOrder convergence_order(const std::vector<double>& steps, const std::vector<double>& errors) {
  if (steps.size() != errors.size() || steps.size() < 3)
    throw DomainError("convergence_order: need at least 3 (step, error) rows");
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (!(steps[i] > 0.0) || !(errors[i] > 0.0)) throw DomainError("convergence_order: steps and errors must be positive");
  std::vector<std::size_t> idx(steps.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return steps[a] > steps[b]; });
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(steps.size());
  for (std::size_t i : idx) {
    const double x = std::log(steps[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  ConvergenceOrder out;
  out.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  for (std::size_t k = 1; k < idx.size(); ++k)
    if (!(errors[idx[k]] < errors[idx[k - 1]])) out.flagged = true;
  if (out.flagged) out.note = "error column is not strictly decreasing under refinement";
  return out;
}

/// A named table of numeric columns (dt vs error, eps vs gap, ...).
struct StudyTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_labels;   // optional, one per row
  std::map<std::string, double> orders;  // estimated orders keyed by column
  std::vector<std::string> flags;
};

struct ReportRow {
  double t = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
  std::map<std::string, double> residuals;
};

struct RunReport {
  std::string config_hash;
  std::vector<ReportRow> rows;
  std::vector<StudyTable> tables;
  std::vector<std::string> warnings;

  void add_trajectory(const Trajectory& traj) {
    for (std::size_t j = 0; j < traj.size(); ++j)
      rows.push_back({traj.times[j], norm_l2(traj.states[j]), sobolev_norm(traj.states[j], 1.0), {}});
  }

  void validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && !(rows[i].t >= rows[i - 1].t)) throw DomainError("run report: rows not ordered in t");
      if (!std::isfinite(rows[i].t) || !std::isfinite(rows[i].l2) || !std::isfinite(rows[i].h1))
        throw NumericalError("run report: non-finite value in row " + std::to_string(i));
      for (const auto& [k, v] : rows[i].residuals)
        if (!std::isfinite(v)) throw NumericalError("run report: non-finite " + k + " in row " + std::to_string(i));
    }
    for (const auto& t : tables)
      for (const auto& r : t.rows) {
        if (r.size() != t.columns.size()) throw DomainError("run report: table '" + t.name + "' has a ragged row");
        if (!t.row_labels.empty() && t.row_labels.size() != t.rows.size())
          throw DomainError("run report: table '" + t.name + "' needs one label per row");
        for (double v : r)
          if (!std::isfinite(v)) throw NumericalError("run report: non-finite cell in table '" + t.name + "'");
      }
  }
};

}  // namespace fracschrod
