#pragma once

// Weyl-Marchaud fractional derivatives of sampled functions, the Lambda_alpha seminorm,
// the W_{alpha,1} norm and the generalized Stieltjes (Young) integral built from them.
//
// Sampled data are represented by their piecewise-linear interpolant. Derivatives use
// product integration: each cell's singular integral is evaluated in closed form against
// the cell's linear interpolant, so derivatives of the interpolant are exact up to rounding.
// The outer integral of the Stieltjes formula uses graded Gauss-Legendre rules on every half
// cell, so the algebraic endpoint behaviour of both derivatives is integrated accurately.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "fracschrod/errors.hpp"
#include "fracschrod/qnoise.hpp"
#include "fracschrod/spectral.hpp"

namespace fracschrod {

template <class T>
struct SampledFunction {
  std::vector<double> times;
  std::vector<T> values;

  SampledFunction() = default;
  SampledFunction(std::vector<double> t, std::vector<T> v) : times(std::move(t)), values(std::move(v)) {
    validate();
  }

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] double horizon() const noexcept { return times.back(); }

  void validate() const {
    if (times.size() != values.size()) throw DomainError("sampled function: times/values length mismatch");
    if (times.size() < 2) throw DomainError("sampled function: need at least two samples");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw DomainError("sampled function: times must be strictly increasing");
    for (const auto& v : values) {
      if constexpr (std::is_same_v<T, Complex>) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          throw DomainError("sampled function: non-finite value");
      } else if (!std::isfinite(v)) {
        throw DomainError("sampled function: non-finite value");
      }
    }
  }

  /// Samples first..last (inclusive) with times shifted so the slice starts at 0.
  [[nodiscard]] SampledFunction slice(std::size_t first, std::size_t last) const {
    if (first >= last || last >= size()) throw DomainError("sampled function: bad slice");
    std::vector<double> t(times.begin() + static_cast<std::ptrdiff_t>(first),
                          times.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    const double t0 = t.front();
    for (auto& x : t) x -= t0;
    t.front() = 0.0;
    return {std::move(t), std::vector<T>(values.begin() + static_cast<std::ptrdiff_t>(first),
                                         values.begin() + static_cast<std::ptrdiff_t>(last) + 1)};
  }
};

using RealFunction = SampledFunction<double>;
using ComplexFunction = SampledFunction<Complex>;

template <class F>
RealFunction sample_function(std::vector<double> times, F&& f) {
  std::vector<double> v(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) v[i] = f(times[i]);
  return {std::move(times), std::move(v)};
}

struct FracConfig {
  double alpha = 0.4;
  /// Gauss-Legendre points per half cell in the outer Stieltjes quadrature.
  int refinement = 8;
  /// Lambda_alpha sup runs over grid pairs at least this many cells apart.
  std::size_t min_sup_cells = 2;
  /// Relative change of the last mode's contribution above which a mode sum is flagged.
  double convergence_threshold = 1e-2;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("fractional order alpha must lie in (0, 1)");
    if (refinement < 2 || refinement > 32) throw ConfigError("quadrature refinement must be in [2, 32]");
  }
  /// alpha must lie in (1 - H, 1/2) for integrals against fBm of index H.
  void validate_stochastic(double hurst) const {
    validate();
    if (!(alpha > 1.0 - hurst && alpha < 0.5))
      throw ConfigError("alpha = " + std::to_string(alpha) + " outside the admissible window (1 - H, 1/2) = (" +
                        std::to_string(1.0 - hurst) + ", 0.5)");
  }
};

/// Default alpha: centre of (1 - H, 1/2).
inline double default_alpha(double hurst) { return 0.5 * ((1.0 - hurst) + 0.5); }

/// Gauss-Legendre nodes and weights mapped to [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto idx = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[idx] = 0.5 * (x + 1.0);
    rule.weights[idx] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

namespace detail {

inline double abs_value(double v) { return std::abs(v); }
inline double abs_value(const Complex& v) { return std::abs(v); }

/// Piecewise-linear interpolant with closed-form Marchaud derivatives.
/// Evaluation points are given as (cell c, fraction theta); distances to nodes are formed from
/// cell-local offsets so points very close to a node keep full relative precision.
template <class T>
class Interpolant {
 public:
  Interpolant(std::span<const double> times, std::span<const T> values) : t_(times), v_(values) {
    slope_.resize(t_.size() - 1);
    for (std::size_t i = 0; i + 1 < t_.size(); ++i) slope_[i] = (v_[i + 1] - v_[i]) / (t_[i + 1] - t_[i]);
    uniform_ = is_uniform_grid(t_);
    h_ = (t_.back() - t_.front()) / static_cast<double>(t_.size() - 1);
  }

  [[nodiscard]] std::size_t cells() const noexcept { return slope_.size(); }
  [[nodiscard]] T value(std::size_t c, double theta) const noexcept {
    if (theta == 1.0) return v_[c + 1];
    return v_[c] + slope_[c] * (theta * (t_[c + 1] - t_[c]));
  }
  [[nodiscard]] bool uniform() const noexcept { return uniform_; }

  /// (j + offset)^(-order) for j = 0..cells()+1: node distances in units of h on a uniform
  /// grid when the evaluation point sits at fraction `offset` past a node.
  [[nodiscard]] std::vector<double> power_table(double offset, double order) const {
    std::vector<double> tab(cells() + 2);
    for (std::size_t j = 0; j < tab.size(); ++j) {
      const double x = static_cast<double>(j) + offset;
      tab[j] = x > 0.0 ? std::pow(x, -order) : 0.0;
    }
    return tab;
  }

  /// D^a_{0+} of the interpolant at s = t_c + theta h_c, s > 0.
  /// `tab`, if given, is power_table(theta, a) and is used for interior theta on uniform grids.
  [[nodiscard]] T left(double a, std::size_t c, double theta, const std::vector<double>* tab = nullptr) const {
    const bool interior = theta > 0.0 && theta < 1.0;
    const bool use_tab = uniform_ && tab != nullptr && interior;
    const double ha = use_tab ? std::pow(h_, -a) : 0.0;
    const double off = theta * (t_[c + 1] - t_[c]);
    auto dist = [&](std::size_t i) { return (t_[c] - t_[i]) + off; };  // s - t_i
    auto upow = [&](std::size_t i) { return use_tab ? ha * (*tab)[c - i] : std::pow(dist(i), -a); };
    const T fs = value(c, theta);
    // nodes strictly left of s: 0..c, or 0..c+1 when theta == 1
    const std::size_t top = theta == 1.0 ? c + 1 : c;
    T integral{};
    if (interior) integral += slope_[c] * (std::pow(off, 1.0 - a) / (1.0 - a));
    double ub_pow = upow(0);
    for (std::size_t i = 0; i < top; ++i) {
      const double ub = dist(i);
      if (i + 1 == top && !interior) {
        // diagonal cell ending at s: f(s) - f(r) = m (s - r)
        integral += slope_[i] * (ub * ub_pow / (1.0 - a));
        break;
      }
      const double ua = dist(i + 1);
      const double ua_pow = upow(i + 1);
      const T A = fs - v_[i] - slope_[i] * ub;
      integral += A * ((ua_pow - ub_pow) / a) + slope_[i] * ((ub * ub_pow - ua * ua_pow) / (1.0 - a));
      ub_pow = ua_pow;
    }
    return (fs * std::pow(dist(0), -a) + a * integral) / std::tgamma(1.0 - a);
  }

  /// Adds mu * d(left(a, c, theta)) / d v_j to w[j] for every node j; interior theta only.
  /// left() is linear in the node values, so this is its exact adjoint.
  void left_adjoint(double a, std::size_t c, double theta, double mu, std::vector<double>& w,
                    const std::vector<double>* tab = nullptr) const {
    const bool use_tab = uniform_ && tab != nullptr;
    const double ha = use_tab ? std::pow(h_, -a) : 0.0;
    const double off = theta * (t_[c + 1] - t_[c]);
    auto dist = [&](std::size_t i) { return (t_[c] - t_[i]) + off; };
    auto upow = [&](std::size_t i) { return use_tab ? ha * (*tab)[c - i] : std::pow(dist(i), -a); };
    const double m = mu / std::tgamma(1.0 - a);
    // f(s) enters with weight s^-a + sum_i (ua^-a - ub^-a) = (s - t_c)^-a (telescoping)
    const double cf = std::pow(off, -a);
    w[c] += m * (1.0 - theta) * cf;
    w[c + 1] += m * theta * cf;
    const double kc = a * std::pow(off, 1.0 - a) / ((1.0 - a) * (t_[c + 1] - t_[c]));
    w[c + 1] += m * kc;
    w[c] -= m * kc;
    double ub_pow = upow(0);
    for (std::size_t i = 0; i < c; ++i) {
      const double ub = dist(i);
      const double ua = dist(i + 1);
      const double ua_pow = upow(i + 1);
      const double E = ua_pow - ub_pow;
      const double F = a * (ub * ub_pow - ua * ua_pow) / (1.0 - a);
      const double K = (F - ub * E) / (t_[i + 1] - t_[i]);
      w[i] += m * (-E - K);
      w[i + 1] += m * K;
      ub_pow = ua_pow;
    }
  }

  /// Right Marchaud derivative without the (-1)^a prefactor, at s = t_c + theta h_c (s < T),
  /// of the interpolant shifted by `shift` (g - shift).
  /// `tab`, if given, is power_table(1 - theta, a) and is used for interior theta on uniform grids.
  [[nodiscard]] T right(double a, std::size_t c, double theta, T shift,
                        const std::vector<double>* tab = nullptr) const {
    const bool interior = theta > 0.0 && theta < 1.0;
    const bool use_tab = uniform_ && tab != nullptr && interior;
    const double ha = use_tab ? std::pow(h_, -a) : 0.0;
    const double hc = t_[c + 1] - t_[c];
    const double rest = (1.0 - theta) * hc;  // t_{c+1} - s
    // t_i - s for i >= c + 1 (i == c only when theta == 0)
    auto dist = [&](std::size_t i) { return i == c ? -theta * hc : (t_[i] - t_[c + 1]) + rest; };
    const T gs = value(c, theta) - shift;
    const std::size_t n = t_.size() - 1;
    // first node strictly right of s
    const std::size_t first = theta == 0.0 ? c : c + 1;
    auto node_pow = [&](std::size_t i) { return use_tab ? ha * (*tab)[i - first] : std::pow(dist(i), -a); };
    T integral{};
    if (interior) integral -= slope_[c] * (std::pow(rest, 1.0 - a) / (1.0 - a));
    double ua_pow = 0.0;
    std::size_t start = first;
    if (!interior) {
      // diagonal cell starting at s: g(s) - g(r) = -m (r - s)
      const std::size_t i = first;
      if (i < n) {
        const double ub = dist(i + 1);
        integral -= slope_[i] * (ub * node_pow(i + 1) / (1.0 - a));
        start = i + 1;
      }
    }
    if (start < n) ua_pow = node_pow(start);
    for (std::size_t i = start; i < n; ++i) {
      const double ua = dist(i);
      const double ub = dist(i + 1);
      const double ub_pow = node_pow(i + 1);
      const T A = gs - (v_[i] - shift) + slope_[i] * ua;
      integral += A * ((ua_pow - ub_pow) / a) - slope_[i] * ((ub * ub_pow - ua * ua_pow) / (1.0 - a));
      ua_pow = ub_pow;
    }
    return (gs * std::pow(dist(n), -a) + a * integral) / std::tgamma(1.0 - a);
  }

 private:
  std::span<const double> t_;
  std::span<const T> v_;
  std::vector<T> slope_;
  bool uniform_ = false;
  double h_ = 0.0;
};

/// Locate t in the grid: returns (cell, theta) with t = t_c + theta h_c.
inline std::pair<std::size_t, double> locate(std::span<const double> times, double t) {
  if (t < times.front() || t > times.back()) throw DomainError("time outside the sampled interval");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t c = static_cast<std::size_t>(it - times.begin());
  c = c == 0 ? 0 : c - 1;
  if (c >= times.size() - 1) return {times.size() - 2, 1.0};
  const double theta = (t - times[c]) / (times[c + 1] - times[c]);
  return {c, theta};
}

}  // namespace detail

/// Left Weyl derivative D^alpha_{0+} f(t), t in (0, T].
template <class T>
T weyl_left(const SampledFunction<T>& f, double alpha, double t) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("weyl_left: alpha must lie in (0, 1)");
  if (!(t > f.times.front())) throw DomainError("weyl_left: t = 0 is singular (1/t^alpha)");
  const auto [c, theta] = detail::locate(f.times, t);
  detail::Interpolant<T> in(f.times, f.values);
  return in.left(alpha, c, theta);
}

/// Right Weyl derivative on (t, T) with the (-1)^alpha prefactor dropped (real convention).
template <class T>
T weyl_right(const SampledFunction<T>& g, double alpha, double t) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("weyl_right: alpha must lie in (0, 1)");
  if (!(t < g.times.back())) throw DomainError("weyl_right: t = T is singular (1/(T-t)^alpha)");
  const auto [c, theta] = detail::locate(g.times, t);
  detail::Interpolant<T> in(g.times, g.values);
  return in.right(alpha, c, theta, T{});
}

namespace detail {

// Graded Gauss nodes (theta in cell units) and weights for the outer Stieltjes quadrature.
// Inside cell c the integrand behaves like (s - t_c)^(1-a) (kinks of f seen by the left
// derivative, plus s^-a on the first cell) and like (t_{c+1} - s)^a (kinks of g seen by the
// right derivative). Each half cell gets a graded rule that flattens its endpoint:
// left half s - t_c = h/2 v^qa, right half t_{c+1} - s = h/2 v^qb.
inline std::pair<std::vector<double>, std::vector<double>> stieltjes_nodes(double a, int refinement) {
  const auto rule = gauss_legendre(refinement);
  const double qa = 3.0 / (1.0 - a);
  const double qb = 3.0;
  std::vector<double> thetas, weights;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double v = rule.nodes[q];
    thetas.push_back(0.5 * std::pow(v, qa));
    weights.push_back(rule.weights[q] * 0.5 * qa * std::pow(v, qa - 1.0));
    thetas.push_back(1.0 - 0.5 * std::pow(v, qb));
    weights.push_back(rule.weights[q] * 0.5 * qb * std::pow(v, qb - 1.0));
  }
  for (double theta : thetas)
    if (!(theta > 0.0 && theta < 1.0)) throw NumericalError("stieltjes_integral: quadrature node hit a cell endpoint");
  return {thetas, weights};
}

}  // namespace detail

/// Generalized Stieltjes integral of f against g over the sampled interval:
///   int f dg = - int_0^T D^alpha_{0+} f(s) Dr^{1-alpha}_{T-} (g - g(T))(s) ds,
/// where Dr is the right derivative without the (-1)^(1-alpha) factor; the two complex
/// prefactors multiply to -1.
template <class T>
T stieltjes_integral(const SampledFunction<T>& f, const RealFunction& g, const FracConfig& cfg = {}) {
  cfg.validate();
  if (f.times != g.times) throw DomainError("stieltjes_integral: f and g must share a time grid");
  const double a = cfg.alpha;
  const double b = 1.0 - a;
  detail::Interpolant<T> fi(f.times, f.values);
  detail::Interpolant<double> gi(g.times, g.values);
  const double gT = g.values.back();
  const std::size_t cells = fi.cells();

  const auto [thetas, weights] = detail::stieltjes_nodes(a, cfg.refinement);
  std::vector<std::vector<double>> tab_left, tab_right;
  if (fi.uniform()) {
    for (double theta : thetas) {
      tab_left.push_back(fi.power_table(theta, a));
      tab_right.push_back(gi.power_table(1.0 - theta, b));
    }
  }
  T total{};
  for (std::size_t c = 0; c < cells; ++c) {
    const double h = f.times[c + 1] - f.times[c];
    T cell{};
    for (std::size_t q = 0; q < thetas.size(); ++q) {
      const auto* tl = fi.uniform() ? &tab_left[q] : nullptr;
      const auto* tr = fi.uniform() ? &tab_right[q] : nullptr;
      const T df = fi.left(a, c, thetas[q], tl);
      const double dg = gi.right(b, c, thetas[q], gT, tr);
      cell += weights[q] * (df * dg);
    }
    total += h * cell;
  }
  if (!std::isfinite(detail::abs_value(total)))
    throw NumericalError("stieltjes_integral: non-finite quadrature (endpoint singularity at cutoff s -> 0 or s -> T)");
  return -total;
}

/// Weights c with stieltjes_integral(f, g) = sum_i c_i f(t_i) for every f sampled on g's grid.
/// The quadrature is linear in f; computing c costs one integral and makes integrals of many
/// integrands against the same g (vector-valued f, many grid points) cheap.
inline std::vector<double> stieltjes_weights(const RealFunction& g, const FracConfig& cfg = {}) {
  cfg.validate();
  const double a = cfg.alpha;
  const double b = 1.0 - a;
  detail::Interpolant<double> gi(g.times, g.values);
  const double gT = g.values.back();
  const auto [thetas, weights] = detail::stieltjes_nodes(a, cfg.refinement);
  std::vector<std::vector<double>> tab_left, tab_right;
  if (gi.uniform()) {
    for (double theta : thetas) {
      tab_left.push_back(gi.power_table(theta, a));
      tab_right.push_back(gi.power_table(1.0 - theta, b));
    }
  }
  std::vector<double> c(g.size(), 0.0);
  for (std::size_t cell = 0; cell < gi.cells(); ++cell) {
    const double h = g.times[cell + 1] - g.times[cell];
    for (std::size_t q = 0; q < thetas.size(); ++q) {
      const auto* tl = gi.uniform() ? &tab_left[q] : nullptr;
      const auto* tr = gi.uniform() ? &tab_right[q] : nullptr;
      const double dg = gi.right(b, cell, thetas[q], gT, tr);
      gi.left_adjoint(a, cell, thetas[q], -h * weights[q] * dg, c, tl);
    }
  }
  return c;
}

template <class T>
T apply_weights(std::span<const double> c, std::span<const T> f) {
  if (c.size() != f.size()) throw DomainError("apply_weights: size mismatch");
  T s{};
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * f[i];
  return s;
}

/// Stieltjes integral over [t_first, t_last] of the common grid.
template <class T>
T stieltjes_integral(const SampledFunction<T>& f, const RealFunction& g, const FracConfig& cfg, std::size_t first,
                     std::size_t last) {
  if (first == 0 && last + 1 == f.size()) return stieltjes_integral(f, g, cfg);
  return stieltjes_integral(f.slice(first, last), g.slice(first, last), cfg);
}

/// Left-point Riemann-Stieltjes sum: sum_k f(t_k) (g(t_{k+1}) - g(t_k)).
template <class T>
T young_riemann(const SampledFunction<T>& f, const RealFunction& g) {
  if (f.times != g.times) throw DomainError("young_riemann: f and g must share a time grid");
  T s{};
  for (std::size_t k = 0; k + 1 < f.size(); ++k) s += f.values[k] * (g.values[k + 1] - g.values[k]);
  return s;
}

namespace detail {

// integral over u in [u0, u1] of |A + B u| u^p du, splitting at the sign change.
// `prim(A, B, u)` must return the antiderivative of (A + B u) u^p.
template <class Prim>
double abs_linear_integral(double A, double B, double u0, double u1, Prim&& prim) {
  auto signed_part = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double sgn = (A + B * mid) >= 0.0 ? 1.0 : -1.0;
    return sgn * (prim(A, B, hi) - prim(A, B, lo));
  };
  if (B != 0.0) {
    const double root = -A / B;
    if (root > u0 && root < u1) return signed_part(u0, root) + signed_part(root, u1);
  }
  return signed_part(u0, u1);
}

}  // namespace detail

/// Lambda_alpha(g) = 1/(Gamma(1-a) Gamma(a)) sup_{s<t} ( |g(t)-g(s)|/(t-s)^{1-a}
///                   + a int_s^t |g(r)-g(s)|/(r-s)^{2-a} dr ),
/// sup over grid pairs at least cfg.min_sup_cells apart; inner integral by product integration.
inline double lambda_alpha(const RealFunction& g, const FracConfig& cfg = {}) {
  cfg.validate();
  const double a = cfg.alpha;
  const auto& t = g.times;
  const auto& v = g.values;
  const std::size_t n = t.size();
  const bool uniform = is_uniform_grid(t);
  const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
  std::vector<double> tab;  // j^(a-1)
  if (uniform) {
    tab.resize(n);
    for (std::size_t j = 1; j < n; ++j) tab[j] = std::pow(static_cast<double>(j) * h, a - 1.0);
  }
  // antiderivative of (A + B u) u^(a-2)
  auto prim = [a](double A, double B, double u) { return A * std::pow(u, a - 1.0) / (a - 1.0) + B * std::pow(u, a) / a; };

  double best = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double inner = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      // cell [t_{j-1}, t_j]; u = r - t_i
      const double m = (v[j] - v[j - 1]) / (t[j] - t[j - 1]);
      const double u1 = t[j] - t[i];
      if (j == i + 1) {
        inner += std::abs(m) * std::pow(u1, a) / a;
      } else {
        const double u0 = t[j - 1] - t[i];
        const double A = (v[j - 1] - v[i]) - m * u0;
        const double d0 = v[j - 1] - v[i], d1 = v[j] - v[i];
        if ((d0 >= 0.0) == (d1 >= 0.0)) {
          // no sign change: closed form with cached powers
          const double p0 = uniform ? tab[j - 1 - i] : std::pow(u0, a - 1.0);
          const double p1 = uniform ? tab[j - i] : std::pow(u1, a - 1.0);
          const double val = A * (p1 - p0) / (a - 1.0) + m * (u1 * p1 - u0 * p0) / a;
          inner += d0 + d1 >= 0.0 ? val : -val;
        } else {
          inner += detail::abs_linear_integral(A, m, u0, u1, prim);
        }
      }
      if (j - i >= cfg.min_sup_cells) {
        const double span = t[j] - t[i];
        const double q = std::abs(v[j] - v[i]) * std::pow(span, a - 1.0) + a * inner;
        best = std::max(best, q);
      }
    }
  }
  return best / (std::tgamma(1.0 - a) * std::tgamma(a));
}

/// ||f||_{alpha,1} = int_0^T ( |f(s)|/s^a + int_0^s |f(s)-f(r)|/(s-r)^{a+1} dr ) ds.
/// Outer weight term by product integration; inner term exact for the interpolant at nodes,
/// then integrated by the trapezoid rule.
inline double w_alpha1_norm(const RealFunction& f, const FracConfig& cfg = {}) {
  cfg.validate();
  const double a = cfg.alpha;
  const auto& t = f.times;
  const auto& v = f.values;
  const std::size_t n = t.size();

  // int |f_h(s)| s^-a ds, f_h = A + B s on each cell
  auto prim_w = [a](double A, double B, double s) {
    return A * std::pow(s, 1.0 - a) / (1.0 - a) + B * std::pow(s, 2.0 - a) / (2.0 - a);
  };
  double weighted = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double m = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
    const double A = v[i] - m * t[i];
    weighted += detail::abs_linear_integral(A, m, t[i], t[i + 1], prim_w);
  }

  // inner(s_j) = int_0^{s_j} |f_j - f_h(r)| (s_j - r)^{-a-1} dr; with u = s_j - r on cell i:
  // f_j - f_h(r) = (f_j - f_i - m_i (s_j - t_i)) + m_i u
  auto prim_i = [a](double A, double B, double u) {
    return A * std::pow(u, -a) / (-a) + B * std::pow(u, 1.0 - a) / (1.0 - a);
  };
  std::vector<double> inner(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double m = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);
      const double ub = t[j] - t[i];
      if (i + 1 == j) {
        acc += std::abs(m) * std::pow(ub, 1.0 - a) / (1.0 - a);
        continue;
      }
      const double ua = t[j] - t[i + 1];
      const double A = v[j] - v[i] - m * ub;
      acc += detail::abs_linear_integral(A, m, ua, ub, prim_i);
    }
    inner[j] = acc;
  }
  double outer = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) outer += 0.5 * (inner[j] + inner[j + 1]) * (t[j + 1] - t[j]);
  return weighted + outer;
}

template <class T>
struct ModeSum {
  T value{};
  std::vector<T> partial_sums;
  std::vector<std::string> warnings;
};

/// Truncated Q-fBm integral sum_p lambda_p int_{t_first}^{t_last} F_s(e_p) d beta_p(s).
/// `integrand(p)` returns the series s -> F_s(e_p) sampled on the field's time grid.
template <class T, class Integrand>
ModeSum<T> stochastic_integral(Integrand&& integrand, const NoiseField& field, const FracConfig& cfg,
                               std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1)) {
  cfg.validate_stochastic(field.paths().front().hurst);
  if (last == static_cast<std::size_t>(-1)) last = field.steps();
  ModeSum<T> out;
  const auto& spec = field.spectrum();
  for (std::size_t p = 0; p < spec.size(); ++p) {
    const double lam = spec.modes[p].amplitude;
    T contrib{};
    if (lam != 0.0) {
      const SampledFunction<T> f = integrand(p);
      const RealFunction beta(field.times(), field.paths()[p].values);
      contrib = lam * stieltjes_integral(f, beta, cfg, first, last);
    }
    out.value += contrib;
    out.partial_sums.push_back(out.value);
  }
  if (out.partial_sums.size() >= 2) {
    const double scale = detail::abs_value(out.value);
    const double change = detail::abs_value(out.partial_sums.back() - out.partial_sums[out.partial_sums.size() - 2]);
    if (scale > 0.0 && change > cfg.convergence_threshold * scale)
      out.warnings.push_back("stochastic_integral: last mode changed the sum by " + std::to_string(change / scale) +
                             " (relative); mode sum may not be converged");
  }
  return out;
}

/// lambda_p-scaled Stieltjes weights of every mode on the window [first, last] of the field's
/// time grid: sum_p lambda_p int F(e_p) d beta_p = sum_p sum_j w[p][j] F_{t_(first+j)}(e_p).
struct NoiseWeights {
  std::size_t first = 0;
  std::size_t last = 0;
  std::vector<std::vector<double>> w;
};

inline NoiseWeights noise_weights(const NoiseField& field, const FracConfig& cfg, std::size_t first = 0,
                                  std::size_t last = static_cast<std::size_t>(-1)) {
  cfg.validate_stochastic(field.paths().front().hurst);
  if (last == static_cast<std::size_t>(-1)) last = field.steps();
  if (!(first < last) || last > field.steps()) throw DomainError("noise_weights: bad time window");
  NoiseWeights out{first, last, {}};
  const auto& spec = field.spectrum();
  for (std::size_t p = 0; p < spec.size(); ++p) {
    const RealFunction beta = RealFunction(field.times(), field.paths()[p].values).slice(first, last);
    auto c = stieltjes_weights(beta, cfg);
    for (auto& x : c) x *= spec.modes[p].amplitude;
    out.w.push_back(std::move(c));
  }
  return out;
}

/// Scalar functional F(B, t) of the noise field with its partial derivatives.
struct NoiseFunctional {
  std::function<double(const RealGrid& b, double t)> value;
  std::function<double(const RealGrid& b, double t)> d_time;
  /// Directional derivative in the noise argument along `direction`.
  std::function<double(const RealGrid& b, double t, const RealGrid& direction)> d_noise;
};

/// |F(B_t,t) - F(B_s,s) - int_s^t d_2F dtau - sum_p lambda_p int_s^t d_1F(B,tau)(e_p) d beta_p|
/// with s, t given as time indices of the field. The time integral uses the trapezoid rule.
inline double chain_rule_residual(const NoiseFunctional& F, const NoiseField& field, std::size_t s, std::size_t t,
                                  const FracConfig& cfg) {
  if (!(s < t) || t > field.steps()) throw DomainError("chain_rule_residual: need s < t within the field grid");
  const auto& times = field.times();
  std::vector<RealGrid> B;
  B.reserve(t - s + 1);
  for (std::size_t k = s; k <= t; ++k) B.push_back(field.value(k));

  const double jump = F.value(B.back(), times[t]) - F.value(B.front(), times[s]);
  double drift = 0.0;
  for (std::size_t k = s; k < t; ++k)
    drift += 0.5 * (F.d_time(B[k - s], times[k]) + F.d_time(B[k + 1 - s], times[k + 1])) * (times[k + 1] - times[k]);

  auto integrand = [&](std::size_t p) {
    std::vector<double> vals(times.size(), 0.0);
    const auto& e = field.mode_values(p);
    for (std::size_t k = s; k <= t; ++k) vals[k] = F.d_noise(B[k - s], times[k], e);
    return RealFunction(times, std::move(vals));
  };
  const auto noise = stochastic_integral<double>(integrand, field, cfg, s, t);
  return std::abs(jump - drift - noise.value);
}

/// Stochastic Fubini residual
///   | sum_p lambda_p int (int_x F(e_p) dx) d beta_p - int_x sum_p lambda_p int F(e_p) d beta_p dx |
/// with `family(k, p)` returning x -> F_{t_k, x}(e_p) on the spatial grid.
template <class Family>
double fubini_residual(Family&& family, const NoiseField& field, std::size_t s, std::size_t t, const FracConfig& cfg) {
  if (!(s < t) || t > field.steps()) throw DomainError("fubini_residual: need s < t within the field grid");
  const auto& times = field.times();
  const auto& grid = field.grid();
  const double dv = grid.cell_volume();
  const std::size_t P = field.spectrum().size();

  // table[p][k] = grid values of F_{t_k}(e_p)
  std::vector<std::vector<RealGrid>> table(P);
  for (std::size_t p = 0; p < P; ++p) {
    table[p].resize(times.size());
    for (std::size_t k = s; k <= t; ++k) table[p][k] = family(k, p);
  }

  auto space_first = [&](std::size_t p) {
    std::vector<double> vals(times.size(), 0.0);
    for (std::size_t k = s; k <= t; ++k) {
      double acc = 0.0;
      for (double x : table[p][k]) acc += x;
      vals[k] = acc * dv;
    }
    return RealFunction(times, std::move(vals));
  };
  const double lhs = stochastic_integral<double>(space_first, field, cfg, s, t).value;

  double rhs = 0.0;
  for (std::size_t x = 0; x < grid.size(); ++x) {
    auto pointwise = [&](std::size_t p) {
      std::vector<double> vals(times.size(), 0.0);
      for (std::size_t k = s; k <= t; ++k) vals[k] = table[p][k][x];
      return RealFunction(times, std::move(vals));
    };
    rhs += stochastic_integral<double>(pointwise, field, cfg, s, t).value * dv;
  }
  return std::abs(lhs - rhs);
}

}  // namespace fracschrod
