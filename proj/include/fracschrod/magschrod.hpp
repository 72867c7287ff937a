#pragma once

// Pseudospectral propagation of the gauge-transformed equation
//   d phi / dt = i Delta_B phi + f,   Delta_B = e^{iB} o Delta o e^{-iB}
//            = Delta - 2i grad B . grad - |grad B|^2 - i Lap B
// on the periodic grid.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fracschrod/errors.hpp"
#include "fracschrod/nonlinear.hpp"
#include "fracschrod/qnoise.hpp"
#include "fracschrod/spectral.hpp"

namespace fracschrod {

enum class Scheme { strang_gauge, crank_nicolson_mag };

inline std::string to_string(Scheme s) { return s == Scheme::strang_gauge ? "strang_gauge" : "crank_nicolson_mag"; }

inline Scheme parse_scheme(const std::string& s) {
  if (s == "strang_gauge") return Scheme::strang_gauge;
  if (s == "crank_nicolson_mag") return Scheme::crank_nicolson_mag;
  throw ConfigError("unknown scheme '" + s + "' (expected strang_gauge or crank_nicolson_mag)");
}

/// Discretization of the first-order part of Delta_B.
/// literal:   -2i b.P grad phi - i Lap B phi
/// symmetric: -i sum_d (b_d P d_d phi + P d_d (b_d phi)), equal in the continuum (product rule)
///            and exactly Hermitian on the grid.
enum class MagneticForm { symmetric, literal };

/// Delta_B phi from grid values of B's gradient and Laplacian. Derivatives of phi are
/// spectral; the first-order term is dealiased with the 2/3 rule.
inline WaveField magnetic_laplacian_apply(const WaveField& phi, const std::vector<RealGrid>& grad_b,
                                          const RealGrid& lap_b, MagneticForm form = MagneticForm::literal) {
  const Grid& g = phi.grid;
  if (grad_b.size() != static_cast<std::size_t>(g.dim) || lap_b.size() != phi.size())
    throw DomainError("magnetic_laplacian_apply: noise grids do not match the wave field");
  for (const auto& c : grad_b)
    if (c.size() != phi.size()) throw DomainError("magnetic_laplacian_apply: noise grids do not match the wave field");
  const auto mask = dealias_mask(g);
  WaveField out = laplacian(phi);
  for (int d = 0; d < g.dim; ++d) {
    const auto& b = grad_b[static_cast<std::size_t>(d)];
    const auto dphi = spectral_derivative(g, phi.values, d, mask);
    if (form == MagneticForm::literal) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= Complex(0.0, 2.0) * b[i] * dphi[i];
    } else {
      ComplexGrid bphi(phi.size());
      for (std::size_t i = 0; i < bphi.size(); ++i) bphi[i] = b[i] * phi[i];
      const auto dbphi = spectral_derivative(g, bphi, d, mask);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= Complex(0.0, 1.0) * (b[i] * dphi[i] + dbphi[i]);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    double b2 = 0.0;
    for (int d = 0; d < g.dim; ++d) b2 += grad_b[static_cast<std::size_t>(d)][i] * grad_b[static_cast<std::size_t>(d)][i];
    out[i] -= b2 * phi[i];
    if (form == MagneticForm::literal) out[i] -= Complex(0.0, lap_b[i]) * phi[i];
  }
  return out;
}

inline WaveField magnetic_laplacian_apply(const WaveField& phi, const NoiseSnapshot& s,
                                          MagneticForm form = MagneticForm::literal) {
  return magnetic_laplacian_apply(phi, s.gradient, s.laplacian, form);
}

/// ||Delta_B phi - e^{iB} Delta (e^{-iB} phi)||_{L^2} with grad B and Lap B taken spectrally from B.
inline double gauge_conjugation_identity(const WaveField& phi, const RealGrid& b,
                                         MagneticForm form = MagneticForm::literal) {
  const Grid& g = phi.grid;
  if (b.size() != phi.size()) throw DomainError("gauge_conjugation_identity: B grid does not match");
  const auto bc = to_complex(b);
  std::vector<RealGrid> grad;
  for (int d = 0; d < g.dim; ++d) grad.push_back(real_part(spectral_derivative(g, bc, d)));
  const auto lap = real_part(spectral_laplacian(g, bc));
  const WaveField lhs = magnetic_laplacian_apply(phi, grad, lap, form);

  WaveField w = phi;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= std::polar(1.0, -b[i]);
  WaveField rhs = laplacian(w);
  for (std::size_t i = 0; i < w.size(); ++i) rhs[i] *= std::polar(1.0, b[i]);
  return norm_l2(lhs - rhs);
}

/// Forcing term f(t_k) of the linear equation, indexed by field time index.
using Forcing = std::function<WaveField(std::size_t k)>;

struct PropagatorOptions {
  Scheme scheme = Scheme::strang_gauge;
  MagneticForm form = MagneticForm::symmetric;
  double tolerance = 1e-14;  // relative fixed-point increment for crank_nicolson_mag
  int max_iterations = 200;
};

/// Stage data of one step t_k -> t_{k+stride}: B at both ends (strang_gauge) or the full
/// snapshot at the midpoint t_{k+stride/2} (crank_nicolson_mag). Always exact field samples.
struct PropagatorStep {
  Scheme scheme = Scheme::strang_gauge;
  std::size_t k = 0;
  std::size_t stride = 1;
  double t = 0.0;
  double dt = 0.0;
  std::vector<double> stage_times;
  RealGrid b_start, b_end;
  NoiseSnapshot midpoint;

  static PropagatorStep make(const NoiseField& field, std::size_t k, std::size_t stride, Scheme scheme) {
    if (stride == 0 || k + stride > field.steps()) throw DomainError("propagate: step leaves the noise time grid");
    PropagatorStep s;
    s.scheme = scheme;
    s.k = k;
    s.stride = stride;
    s.t = field.times()[k];
    s.dt = field.time_step() * static_cast<double>(stride);  // uniform grid: same dt for every k
    if (scheme == Scheme::strang_gauge) {
      s.b_start = field.value(k);
      s.b_end = field.value(k + stride);
      s.stage_times = {s.t, s.t + s.dt};
    } else {
      if (stride % 2 != 0)
        throw ConfigError("crank_nicolson_mag samples B at the step midpoint: the noise grid must be twice as fine as dt");
      s.midpoint = field.snapshot(k + stride / 2);
      s.stage_times = {field.times()[k + stride / 2]};
    }
    return s;
  }
};

/// Iteration record of the last implicit solve.
struct SolveDiagnostics {
  int iterations = 0;
  double last_increment = 0.0;
};

/// Reusable stepping machinery for a fixed grid and dt (caches kinetic phases).
class Propagator {
 public:
  Propagator(const Grid& grid, double dt, PropagatorOptions options = {})
      : grid_(grid), dt_(dt), options_(options) {
    if (!(dt > 0.0)) throw DomainError("propagator: dt must be positive");
    half_kinetic_ = kinetic_phase(grid, 0.5 * dt);
    const auto k2 = wavenumber_squared(grid);
    const double tau = 0.5 * dt;
    explicit_.resize(k2.size());
    implicit_.resize(k2.size());
    for (std::size_t i = 0; i < k2.size(); ++i) {
      explicit_[i] = Complex(1.0, -tau * k2[i]);        // I + i tau Delta
      implicit_[i] = 1.0 / Complex(1.0, tau * k2[i]);   // (I - i tau Delta)^-1
    }
  }

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] const PropagatorOptions& options() const noexcept { return options_; }
  [[nodiscard]] const SolveDiagnostics& diagnostics() const noexcept { return diag_; }

  void half_kinetic(WaveField& u) const { apply_kinetic(grid_, u.values, half_kinetic_); }

  /// strang_gauge: Psi = e^{-iB0} phi, half kinetic, phase e^{-i(B1 - B0 + dt G)}, half
  /// kinetic, phi = e^{iB1} Psi. `potential`, if given, maps Psi to the real G of g = G Psi.
  WaveField strang(const WaveField& phi, const PropagatorStep& step,
                   const std::function<RealGrid(const WaveField&)>& potential = {}) const {
    WaveField psi = phi;
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -step.b_start[i]);
    half_kinetic(psi);
    if (potential) {
      const auto G = potential(psi);
      for (std::size_t i = 0; i < psi.size(); ++i)
        psi[i] *= std::polar(1.0, -(step.b_end[i] - step.b_start[i]) - dt_ * G[i]);
    } else {
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -(step.b_end[i] - step.b_start[i]));
    }
    half_kinetic(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, step.b_end[i]);
    return psi;
  }

  /// crank_nicolson_mag: implicit midpoint phi' = phi + i dt Delta_B (phi + phi')/2 with B at
  /// the midpoint. Solved by the fixed point
  ///   (I - i tau Delta) phi'_{j+1} = (I + i tau Delta) phi + i tau L (phi + phi'_j),
  /// L = Delta_B - Delta, tau = dt/2.
  WaveField crank_nicolson(const WaveField& phi, const PropagatorStep& step) {
    const double tau = 0.5 * dt_;
    auto lower = [&](const WaveField& u) {  // L u
      WaveField l = magnetic_laplacian_apply(u, step.midpoint, options_.form);
      l -= laplacian(u);
      return l;
    };
    // constant part: (I + i tau Delta) phi + i tau L phi, in Fourier space where convenient
    ComplexGrid base = phi.values;
    fft_forward(grid_, base);
    for (std::size_t i = 0; i < base.size(); ++i) base[i] *= explicit_[i];
    fft_backward(grid_, base);
    const WaveField lphi = lower(phi);
    for (std::size_t i = 0; i < base.size(); ++i) base[i] += Complex(0.0, tau) * lphi[i];

    WaveField next = phi;
    const double scale = std::max(norm_l2(phi), 1e-300);
    diag_ = {};
    for (int it = 1; it <= options_.max_iterations; ++it) {
      const WaveField lnext = lower(next);
      ComplexGrid rhs(base.size());
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = base[i] + Complex(0.0, tau) * lnext[i];
      fft_forward(grid_, rhs);
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] *= implicit_[i];
      fft_backward(grid_, rhs);
      WaveField cand(grid_, std::move(rhs));
      const double inc = norm_l2(cand - next) / scale;
      next = std::move(cand);
      diag_.iterations = it;
      diag_.last_increment = inc;
      if (!next.all_finite()) break;
      if (inc <= options_.tolerance) return next;
    }
    double bmax = 0.0;
    for (const auto& c : step.midpoint.gradient)
      for (double v : c) bmax = std::max(bmax, std::abs(v));
    throw NumericalError("crank_nicolson_mag: fixed-point solve did not converge at t = " + std::to_string(step.t) +
                         " after " + std::to_string(diag_.iterations) + " iterations (last relative increment " +
                         std::to_string(diag_.last_increment) + ", tolerance " + std::to_string(options_.tolerance) +
                         ", dt = " + std::to_string(dt_) + ", max |grad B| = " + std::to_string(bmax) +
                         "); reduce dt");
  }

  /// One linear step U(t+dt, t) of the selected scheme.
  WaveField linear_step(const WaveField& phi, const PropagatorStep& step) {
    return options_.scheme == Scheme::strang_gauge ? strang(phi, step) : crank_nicolson(phi, step);
  }

 private:
  Grid grid_;
  double dt_;
  PropagatorOptions options_;
  ComplexGrid half_kinetic_;
  ComplexGrid explicit_, implicit_;
  SolveDiagnostics diag_;
};

/// One step phi(t_k) -> phi(t_{k+stride}): U(t+dt,t) phi plus the Duhamel forcing term by the
/// trapezoid rule, U(t+dt,t)(phi + dt/2 f(t)) + dt/2 f(t+dt).
inline WaveField propagate(const WaveField& phi, const NoiseField& field, std::size_t k, std::size_t stride,
                           const Forcing& forcing = {}, PropagatorOptions options = {}) {
  const auto step = PropagatorStep::make(field, k, stride, options.scheme);
  Propagator prop(phi.grid, step.dt, options);
  if (!forcing) return prop.linear_step(phi, step);
  WaveField u = phi;
  const WaveField f0 = forcing(k);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += 0.5 * step.dt * f0[i];
  u = prop.linear_step(u, step);
  const WaveField f1 = forcing(k + stride);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += 0.5 * step.dt * f1[i];
  return u;
}

/// Composition of propagate steps from field index k_begin to k_end in steps of `stride`.
/// Returns phi at k_begin, k_begin + stride, ..., k_end.
inline std::vector<WaveField> evolve(const WaveField& phi0, const NoiseField& field, std::size_t k_begin,
                                     std::size_t k_end, std::size_t stride, const Forcing& forcing = {},
                                     PropagatorOptions options = {}) {
  if (k_end < k_begin || stride == 0 || (k_end - k_begin) % stride != 0 || k_end > field.steps())
    throw DomainError("evolve: [k_begin, k_end] must be a whole number of steps on the noise grid");
  phi0.grid.validate();
  std::vector<WaveField> out{phi0};
  if (k_end == k_begin) return out;
  const double dt = field.time_step() * static_cast<double>(stride);
  Propagator prop(phi0.grid, dt, options);
  for (std::size_t k = k_begin; k < k_end; k += stride) {
    const auto step = PropagatorStep::make(field, k, stride, options.scheme);
    WaveField u = out.back();
    if (forcing) {
      const WaveField f0 = forcing(k);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] += 0.5 * dt * f0[i];
    }
    u = prop.linear_step(u, step);
    if (forcing) {
      const WaveField f1 = forcing(k + stride);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] += 0.5 * dt * f1[i];
    }
    out.push_back(std::move(u));
  }
  return out;
}

/// Observed constant in ||u(t)||_{H^q} <= C (||v||_{H^q} + int_0^t ||f||_{H^q}): the max over
/// the trajectory of the ratio, with the forcing integral by the trapezoid rule.
/// `forcing_norms[j]` is ||f(t_j)||_{H^q} at the trajectory times.
inline double apriori_constant(const std::vector<WaveField>& traj, const std::vector<double>& forcing_norms, double dt,
                               double q) {
  if (traj.empty() || forcing_norms.size() != traj.size()) throw DomainError("apriori_constant: size mismatch");
  const double v = sobolev_norm(traj.front(), q);
  double integral = 0.0, worst = 0.0;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    if (j > 0) integral += 0.5 * dt * (forcing_norms[j - 1] + forcing_norms[j]);
    const double den = v + integral;
    if (den > 0.0) worst = std::max(worst, sobolev_norm(traj[j], q) / den);
  }
  return worst;
}

}  // namespace fracschrod
