#pragma once

// The stochastic Schroedinger equation
//   d Psi = i Lap Psi dt - i Psi dB - i g(Psi) dt
// solved by direct splitting and through the gauge variable phi = e^{iB} Psi, plus the
// residuals that check a computed trajectory against the Duhamel and weak formulations.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fracschrod/errors.hpp"
#include "fracschrod/fbm.hpp"
#include "fracschrod/fraccalc.hpp"
#include "fracschrod/magschrod.hpp"
#include "fracschrod/nonlinear.hpp"
#include "fracschrod/qnoise.hpp"
#include "fracschrod/spectral.hpp"

namespace fracschrod {

struct Provenance {
  std::string route;   // "direct" or "gauge"
  std::string scheme;  // propagator scheme of the route
  std::uint64_t seed = 0;
  std::string config_hash;
  double dt = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<WaveField> states;
  std::size_t stride = 1;  // field time indices per step
  Provenance provenance;

  [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
  [[nodiscard]] const WaveField& back() const { return states.back(); }
  /// Field time index of snapshot j.
  [[nodiscard]] std::size_t field_index(std::size_t j) const noexcept { return j * stride; }

  void validate() const {
    if (states.empty() || states.size() != times.size()) throw DomainError("trajectory: snapshot count must match the time grid");
    if (provenance.route.empty() || provenance.scheme.empty()) throw DomainError("trajectory: incomplete provenance");
  }
};

struct SolveOptions {
  std::string config_hash;
  MagneticForm form = MagneticForm::symmetric;
};

namespace detail {

// stride of dt on the field grid and the number of steps to reach T
inline std::pair<std::size_t, std::size_t> step_layout(const NoiseField& field, double dt, double T) {
  if (!(dt > 0.0) || !(T > 0.0)) throw ConfigError("dt and T must be positive");
  const double h = field.time_step();
  const double r = dt / h;
  const auto stride = static_cast<std::size_t>(std::llround(r));
  if (stride == 0 || std::abs(r - static_cast<double>(stride)) > 1e-9 * r)
    throw ConfigError("dt = " + std::to_string(dt) + " is not a multiple of the noise time step " + std::to_string(h));
  const double nsteps = T / (h * static_cast<double>(stride));
  const auto steps = static_cast<std::size_t>(std::llround(nsteps));
  if (steps == 0 || std::abs(nsteps - static_cast<double>(steps)) > 1e-9 * nsteps)
    throw ConfigError("T is not a whole number of steps dt");
  if (steps * stride > field.steps()) throw ConfigError("T exceeds the sampled noise horizon");
  return {stride, steps};
}

inline void check_finite(const WaveField& u, double t) {
  if (!u.all_finite()) throw NumericalError("solver produced non-finite values at t = " + std::to_string(t));
}

inline Trajectory start_trajectory(const WaveField& psi0, const NoiseField& field, std::size_t stride,
                                   std::string route, std::string scheme, double dt, const SolveOptions& opts) {
  Trajectory tr;
  tr.stride = stride;
  tr.provenance = {std::move(route), std::move(scheme), field.paths().front().seed, opts.config_hash, dt};
  tr.times.push_back(field.times()[0]);
  tr.states.push_back(psi0);
  return tr;
}

inline void multiply_phase(WaveField& u, const RealGrid& b, double sign) {
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= std::polar(1.0, sign * b[i]);
}

}  // namespace detail

/// Strang splitting in the original variable: half kinetic step, exact phase
/// Psi exp(-i (dB + dt G[Psi])) with dB the exact noise increment, half kinetic step.
inline Trajectory solve_direct(const WaveField& psi0, const NoiseField& field, const NonlinearitySpec& spec, double dt,
                               double T, const SolveOptions& opts = {}) {
  if (!(psi0.grid == field.grid())) throw DomainError("solve_direct: initial datum and noise use different grids");
  spec.validate(psi0.grid.dim, 0);
  const auto [stride, steps] = detail::step_layout(field, dt, T);
  Trajectory tr = detail::start_trajectory(psi0, field, stride, "direct", "strang_split", dt, opts);
  Propagator prop(psi0.grid, dt, {Scheme::strang_gauge, opts.form});
  WaveField psi = psi0;
  RealGrid b0 = field.value(0);
  for (std::size_t j = 0; j < steps; ++j) {
    const std::size_t k1 = (j + 1) * stride;
    const RealGrid b1 = field.value(k1);
    prop.half_kinetic(psi);
    if (spec.active()) {
      const auto G = nonlinear_potential(psi, spec);
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -(b1[i] - b0[i]) - dt * G[i]);
    } else {
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -(b1[i] - b0[i]));
    }
    prop.half_kinetic(psi);
    detail::check_finite(psi, field.times()[k1]);
    tr.times.push_back(field.times()[k1]);
    tr.states.push_back(psi);
    b0 = b1;
  }
  return tr;
}

/// Gauge route: evolve phi = e^{iB} Psi under d phi = i Delta_B phi dt - i g(phi) dt
/// (g(e^{iB} Psi) = e^{iB} g(Psi)) and return Psi = e^{-iB} phi.
/// strang_gauge folds the nonlinear phase into the middle of the step; crank_nicolson_mag
/// uses N(dt/2) o CN o N(dt/2) with N the exact flow of the nonlinear phase.
inline Trajectory solve_gauge(const WaveField& psi0, const NoiseField& field, const NonlinearitySpec& spec, double dt,
                              double T, Scheme scheme, const SolveOptions& opts = {}) {
  if (!(psi0.grid == field.grid())) throw DomainError("solve_gauge: initial datum and noise use different grids");
  spec.validate(psi0.grid.dim, 0);
  const auto [stride, steps] = detail::step_layout(field, dt, T);
  Trajectory tr = detail::start_trajectory(psi0, field, stride, "gauge", to_string(scheme), dt, opts);
  Propagator prop(psi0.grid, dt, {scheme, opts.form});
  WaveField phi = psi0;
  detail::multiply_phase(phi, field.value(0), 1.0);
  std::function<RealGrid(const WaveField&)> potential;
  if (spec.active()) potential = [&spec](const WaveField& u) { return nonlinear_potential(u, spec); };
  for (std::size_t j = 0; j < steps; ++j) {
    const std::size_t k = j * stride;
    const auto step = PropagatorStep::make(field, k, stride, scheme);
    if (scheme == Scheme::strang_gauge) {
      phi = prop.strang(phi, step, potential);
    } else {
      nonlinear_phase_flow(phi, spec, 0.5 * dt);
      phi = prop.crank_nicolson(phi, step);
      nonlinear_phase_flow(phi, spec, 0.5 * dt);
    }
    const std::size_t k1 = k + stride;
    WaveField psi = phi;
    detail::multiply_phase(psi, field.value(k1), -1.0);
    detail::check_finite(psi, field.times()[k1]);
    tr.times.push_back(field.times()[k1]);
    tr.states.push_back(std::move(psi));
  }
  return tr;
}

/// Residual of the representation formula
///   Psi(t) = e^{-iB_t} [ U(t,0) Psi0 + int_0^t U(t,s) F(s) ds ],  F(s) = -i e^{iB_s} g(Psi(s)),
/// with U re-propagated by `scheme` and the Duhamel integral by the trapezoid rule
/// (forward sweep R_{j+1} = U_j (R_j + dt/2 F_j) + dt/2 F_{j+1}). Returns the L^2 residual at
/// every snapshot.
inline std::vector<double> duhamel_residual(const Trajectory& traj, const NoiseField& field, const NonlinearitySpec& spec,
                                            Scheme scheme = Scheme::strang_gauge,
                                            MagneticForm form = MagneticForm::symmetric) {
  traj.validate();
  const double dt = field.time_step() * static_cast<double>(traj.stride);
  Propagator prop(traj.states.front().grid, dt, {scheme, form});
  auto forcing = [&](std::size_t j) {
    WaveField f = apply_g(traj.states[j], spec);
    const auto b = field.value(traj.field_index(j));
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= Complex(0.0, -1.0) * std::polar(1.0, b[i]);
    return f;
  };
  std::vector<double> out{0.0};
  WaveField r = traj.states.front();
  detail::multiply_phase(r, field.value(0), 1.0);
  WaveField f0 = spec.active() ? forcing(0) : WaveField(r.grid);
  for (std::size_t j = 0; j + 1 < traj.size(); ++j) {
    const auto step = PropagatorStep::make(field, traj.field_index(j), traj.stride, scheme);
    if (spec.active())
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += 0.5 * dt * f0[i];
    r = prop.linear_step(r, step);
    if (spec.active()) {
      const WaveField f1 = forcing(j + 1);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += 0.5 * dt * f1[i];
      f0 = f1;
    }
    WaveField psi = r;
    detail::multiply_phase(psi, field.value(traj.field_index(j + 1)), -1.0);
    out.push_back(norm_l2(psi - traj.states[j + 1]));
  }
  return out;
}

/// Test function family w(t, x) with its exact time derivative.
struct TestFunction {
  std::function<WaveField(double t)> value;
  std::function<WaveField(double t)> d_time;
};

/// The terms of the weak formulation at time t (inner product (f, g) = int conj(f) g):
///   (Psi(t), w(t)) - (Psi0, w(0)) = int (Psi, dw/ds) ds - i int (Psi, Lap w) ds
///                                   + i sum_p lambda_p int (Psi e_p, w) d beta_p + i int (g(Psi), w) ds
struct WeakFormTerms {
  Complex pairing_change;
  Complex time_derivative;
  Complex laplacian;
  Complex noise;
  Complex nonlinear;
  [[nodiscard]] double residual() const {
    return std::abs(pairing_change - time_derivative + Complex(0.0, 1.0) * laplacian - Complex(0.0, 1.0) * noise -
                    Complex(0.0, 1.0) * nonlinear);
  }
};

/// Weak-form terms at snapshot `j_end` (default: last). Deterministic time integrals use the
/// trapezoid rule on the trajectory grid; the stochastic term is the generalized Stieltjes
/// integral (fraccalc) of s -> (Psi(s) e_p, w(s)) against each beta_p.
inline WeakFormTerms weak_form_terms(const Trajectory& traj, const NoiseField& field, const NonlinearitySpec& spec,
                                     const TestFunction& w, const FracConfig& cfg,
                                     std::size_t j_end = static_cast<std::size_t>(-1)) {
  traj.validate();
  cfg.validate_stochastic(field.paths().front().hurst);
  if (j_end == static_cast<std::size_t>(-1)) j_end = traj.size() - 1;
  if (j_end >= traj.size()) throw DomainError("weak_form_residual: time index outside the trajectory");
  WeakFormTerms terms{};
  const auto& s0 = traj.states.front();
  terms.pairing_change = inner(traj.states[j_end], w.value(traj.times[j_end])) - inner(s0, w.value(traj.times[0]));
  if (j_end == 0) return terms;

  const NoiseField coarse = field.subsample(traj.stride);
  const auto weights = noise_weights(coarse, cfg, 0, j_end);
  const auto& spec_modes = coarse.spectrum();
  std::vector<Complex> dw(j_end + 1), lap(j_end + 1), gt(j_end + 1);
  std::vector<std::vector<Complex>> pm(spec_modes.size(), std::vector<Complex>(j_end + 1));
  for (std::size_t j = 0; j <= j_end; ++j) {
    const double t = traj.times[j];
    const auto& psi = traj.states[j];
    const WaveField wt = w.value(t);
    dw[j] = inner(psi, w.d_time(t));
    lap[j] = inner(psi, laplacian(wt));
    gt[j] = spec.active() ? inner(apply_g(psi, spec), wt) : Complex{};
    for (std::size_t p = 0; p < spec_modes.size(); ++p) {
      const auto& e = coarse.mode_values(p);
      Complex acc{};
      for (std::size_t i = 0; i < psi.size(); ++i) acc += std::conj(psi[i]) * e[i] * wt[i];
      pm[p][j] = acc * psi.grid.cell_volume();
    }
  }
  auto trapezoid = [&](const std::vector<Complex>& v) {
    Complex s{};
    for (std::size_t j = 0; j < j_end; ++j) s += 0.5 * (v[j] + v[j + 1]) * (traj.times[j + 1] - traj.times[j]);
    return s;
  };
  terms.time_derivative = trapezoid(dw);
  terms.laplacian = trapezoid(lap);
  terms.nonlinear = trapezoid(gt);
  for (std::size_t p = 0; p < spec_modes.size(); ++p) terms.noise += apply_weights<Complex>(weights.w[p], pm[p]);
  return terms;
}

inline double weak_form_residual(const Trajectory& traj, const NoiseField& field, const NonlinearitySpec& spec,
                                 const TestFunction& w, const FracConfig& cfg,
                                 std::size_t j_end = static_cast<std::size_t>(-1)) {
  return weak_form_terms(traj, field, spec, w, cfg, j_end).residual();
}

/// || Psi(t) - Psi0 - i int Lap Psi ds + i sum_p lambda_p int Psi e_p d beta_p + i int g(Psi) ds ||_{L^2}
/// at the last snapshot; the noise term uses the generalized Stieltjes integral pointwise on the grid.
inline double classical_residual(const Trajectory& traj, const NoiseField& field, const NonlinearitySpec& spec,
                                 const FracConfig& cfg) {
  traj.validate();
  const std::size_t m = traj.size() - 1;
  if (m == 0) return 0.0;
  const NoiseField coarse = field.subsample(traj.stride);
  const auto weights = noise_weights(coarse, cfg, 0, m);
  const Grid& g = traj.states.front().grid;
  WaveField r = traj.states[m] - traj.states.front();
  const Complex I(0.0, 1.0);
  for (std::size_t j = 0; j <= m; ++j) {
    const double wj = (j == 0 || j == m ? 0.5 : 1.0) * (traj.times[1] - traj.times[0]);
    const auto& psi = traj.states[j];
    const WaveField lap = laplacian(psi);
    const WaveField gp = apply_g(psi, spec);
    for (std::size_t i = 0; i < g.size(); ++i) r[i] += -I * wj * lap[i] + I * wj * gp[i];
    for (std::size_t p = 0; p < weights.w.size(); ++p) {
      const double c = weights.w[p][j];
      const auto& e = coarse.mode_values(p);
      for (std::size_t i = 0; i < g.size(); ++i) r[i] += I * c * psi[i] * e[i];
    }
  }
  return norm_l2(r);
}

/// Time-Hoelder exponent of t -> Psi(t) in H^m from the second-moment structure function of
/// the snapshot sequence (lags 2^j steps).
inline double solution_holder(const Trajectory& traj, double m, LagWindow window = {}) {
  traj.validate();
  const std::size_t max_lag = std::size_t{1} << window.j_max;
  if (window.j_min < 0 || window.j_max <= window.j_min) throw DomainError("solution_holder: bad lag window");
  if (traj.size() < 8 * max_lag) throw DomainError("solution_holder: trajectory too short for the lag window");
  std::vector<double> lags, msq;
  for (int j = window.j_min; j <= window.j_max; ++j) {
    const std::size_t lag = std::size_t{1} << j;
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k + lag < traj.size(); k += std::max<std::size_t>(1, lag / 2)) {
      const double d = sobolev_norm(traj.states[k + lag] - traj.states[k], m);
      s += d * d;
      ++count;
    }
    lags.push_back(static_cast<double>(lag));
    msq.push_back(s / static_cast<double>(count));
  }
  return holder_from_structure(lags, msq);
}

}  // namespace fracschrod
