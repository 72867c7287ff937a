#pragma once

// Gauge-invariant nonlinearities g(Psi) = G[Psi] Psi with a real potential G:
// power law mu |Psi|^{2 sigma} and the periodic Hartree (Coulomb) potential.

#include <cmath>
#include <numbers>
#include <string>

#include "fracschrod/errors.hpp"
#include "fracschrod/spectral.hpp"

namespace fracschrod {

enum class NonlinearityKind { none, power, hartree };

inline std::string to_string(NonlinearityKind k) {
  switch (k) {
    case NonlinearityKind::none:
      return "none";
    case NonlinearityKind::power:
      return "power";
    case NonlinearityKind::hartree:
      return "hartree";
  }
  return "?";
}

inline NonlinearityKind parse_nonlinearity(const std::string& s) {
  if (s == "none") return NonlinearityKind::none;
  if (s == "power") return NonlinearityKind::power;
  if (s == "hartree") return NonlinearityKind::hartree;
  throw ConfigError("unknown nonlinearity '" + s + "' (expected none, power or hartree)");
}

struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::none;
  double sigma = 1.0;     // power: exponent in |Psi|^{2 sigma}
  double mu = 1.0;        // power: coupling
  double coupling = 1.0;  // hartree: prefactor of V[Psi]

  static NonlinearitySpec none() { return {}; }
  static NonlinearitySpec power(double sigma, double mu) { return {NonlinearityKind::power, sigma, mu, 1.0}; }
  static NonlinearitySpec hartree(double coupling = 1.0) { return {NonlinearityKind::hartree, 1.0, 1.0, coupling}; }

  [[nodiscard]] bool active() const noexcept { return kind != NonlinearityKind::none; }

  /// Checks the admissible parameter ranges for dimension `dim` and Sobolev index `q`.
  void validate(int dim, int q) const {
    if (kind == NonlinearityKind::power) {
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("power nonlinearity needs sigma >= 0");
      if (!std::isfinite(mu)) throw ConfigError("power nonlinearity needs a finite mu");
      if (dim > 1 && q == 2 && sigma < 0.5)
        throw ConfigError("power nonlinearity with n > 1 and q = 2 requires sigma >= 1/2");
    }
    if (kind == NonlinearityKind::hartree) {
      if (dim != 3) throw ConfigError("hartree nonlinearity is defined for n = 3 only (got n = " + std::to_string(dim) + ")");
      if (!std::isfinite(coupling)) throw ConfigError("hartree coupling must be finite");
    }
  }
};

/// Periodic Coulomb potential of the density |Psi|^2: V_k = 4 pi rho_k / |k|^2, V_0 = 0.
inline RealGrid hartree_potential(const WaveField& psi) {
  const Grid& g = psi.grid;
  if (g.dim != 3) throw ConfigError("hartree_potential requires a three-dimensional grid");
  ComplexGrid rho(psi.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(psi[i]);
  fft_forward(g, rho);
  const auto k2 = wavenumber_squared(g);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = k2[i] > 0.0 ? rho[i] * (4.0 * std::numbers::pi / k2[i]) : 0.0;
  fft_backward(g, rho);
  return real_part(rho);
}

/// The real potential G with g(Psi) = G Psi.
inline RealGrid nonlinear_potential(const WaveField& psi, const NonlinearitySpec& spec) {
  switch (spec.kind) {
    case NonlinearityKind::none:
      return RealGrid(psi.size(), 0.0);
    case NonlinearityKind::power: {
      RealGrid G(psi.size());
      for (std::size_t i = 0; i < G.size(); ++i) {
        const double r2 = std::norm(psi[i]);
        G[i] = spec.sigma == 0.0 ? spec.mu : (r2 == 0.0 ? 0.0 : spec.mu * std::pow(r2, spec.sigma));
      }
      return G;
    }
    case NonlinearityKind::hartree: {
      auto V = hartree_potential(psi);
      for (auto& v : V) v *= spec.coupling;
      return V;
    }
  }
  return {};
}

inline WaveField apply_g(const WaveField& psi, const NonlinearitySpec& spec) {
  spec.validate(psi.grid.dim, 0);
  WaveField out(psi.grid);
  if (!spec.active()) return out;
  const auto G = nonlinear_potential(psi, spec);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = G[i] * psi[i];
  return out;
}

/// Exact flow of d psi = -i g(psi) dt over time tau: |psi| is conserved pointwise, so
/// psi(tau) = exp(-i tau G[psi]) psi.
inline void nonlinear_phase_flow(WaveField& psi, const NonlinearitySpec& spec, double tau) {
  if (!spec.active()) return;
  const auto G = nonlinear_potential(psi, spec);
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -tau * G[i]);
}

/// ||g(Psi1) - g(Psi2)||_{H^p} / ||Psi1 - Psi2||_{H^p}.
inline double lipschitz_probe(const WaveField& psi1, const WaveField& psi2, const NonlinearitySpec& spec, double p) {
  const WaveField d = psi1 - psi2;
  const double den = sobolev_norm(d, p);
  if (!(den > 0.0)) throw DomainError("lipschitz_probe: identical inputs, ratio undefined");
  return sobolev_norm(apply_g(psi1, spec) - apply_g(psi2, spec), p) / den;
}

/// Envelope C (||Psi1||_{H^1}^2 + ||Psi2||_{H^1}^2) for the Hartree Lipschitz ratio.
inline double hartree_envelope(const WaveField& psi1, const WaveField& psi2, double constant) {
  const double a = sobolev_norm(psi1, 1.0), b = sobolev_norm(psi2, 1.0);
  return constant * (a * a + b * b);
}

/// ||g(e^{i theta} Psi) - e^{i theta} g(Psi)||_{L^2} for a real phase grid theta.
inline double gauge_invariance_defect(const WaveField& psi, const RealGrid& theta, const NonlinearitySpec& spec) {
  WaveField rotated = psi;
  for (std::size_t i = 0; i < psi.size(); ++i) rotated[i] *= std::polar(1.0, theta[i]);
  WaveField lhs = apply_g(rotated, spec);
  const WaveField g = apply_g(psi, spec);
  for (std::size_t i = 0; i < psi.size(); ++i) lhs[i] -= std::polar(1.0, theta[i]) * g[i];
  return norm_l2(lhs);
}

/// max |Im(g(Psi) conj(Psi))| over the grid.
inline double charge_symmetry_defect(const WaveField& psi, const NonlinearitySpec& spec) {
  const WaveField g = apply_g(psi, spec);
  double m = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) m = std::max(m, std::abs((g[i] * std::conj(psi[i])).imag()));
  return m;
}

/// ||g(Psi)||_{H^q} / ||Psi||_{H^q}.
inline double growth_ratio(const WaveField& psi, const NonlinearitySpec& spec, double q) {
  const double den = sobolev_norm(psi, q);
  if (!(den > 0.0)) throw DomainError("growth_ratio: zero input");
  return sobolev_norm(apply_g(psi, spec), q) / den;
}

}  // namespace fracschrod
