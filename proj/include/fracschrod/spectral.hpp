#pragma once

// Periodic grids, complex grid functions and the pseudospectral toolbox
// (FFT, spectral derivatives, Sobolev norms) shared by every solver module.

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fracschrod/errors.hpp"

namespace fracschrod {

using Complex = std::complex<double>;
using RealGrid = std::vector<double>;
using ComplexGrid = std::vector<Complex>;

/// Uniform periodic grid on the torus [0, L)^dim with `points` nodes per axis.
/// Storage is row-major with axis 0 slowest.
struct Grid {
  int dim = 1;
  std::size_t points = 64;
  double length = 2.0 * std::numbers::pi;

  [[nodiscard]] std::size_t size() const noexcept {
    std::size_t s = 1;
    for (int d = 0; d < dim; ++d) s *= points;
    return s;
  }
  [[nodiscard]] double spacing() const noexcept { return length / static_cast<double>(points); }
  [[nodiscard]] double cell_volume() const noexcept { return std::pow(spacing(), dim); }
  [[nodiscard]] double volume() const noexcept { return std::pow(length, dim); }

  /// Signed integer frequency of FFT index i (Nyquist mapped to -N/2).
  [[nodiscard]] long frequency(std::size_t i) const noexcept {
    const auto n = static_cast<long>(points);
    const auto ii = static_cast<long>(i);
    return ii < n / 2 ? ii : ii - n;
  }
  [[nodiscard]] double wavenumber(std::size_t i) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(frequency(i)) / length;
  }
  /// Coordinate index of flat index `flat` along `axis`.
  [[nodiscard]] std::size_t axis_index(std::size_t flat, int axis) const noexcept {
    for (int d = dim - 1; d > axis; --d) flat /= points;
    return flat % points;
  }
  [[nodiscard]] double coordinate(std::size_t flat, int axis) const noexcept {
    return spacing() * static_cast<double>(axis_index(flat, axis));
  }

  void validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("grid dimension must be 1, 2 or 3");
    if (points < 4 || points % 2 != 0) throw ConfigError("grid points per axis must be even and >= 4");
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("box length must be positive");
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Complex-valued grid function (the wave function Psi, the gauge variable phi, test functions).
struct WaveField {
  Grid grid;
  ComplexGrid values;

  WaveField() = default;
  explicit WaveField(const Grid& g) : grid(g), values(g.size(), Complex{0.0, 0.0}) {}
  WaveField(const Grid& g, ComplexGrid v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw DomainError("wave field size does not match grid");
  }

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  Complex& operator[](std::size_t i) noexcept { return values[i]; }
  const Complex& operator[](std::size_t i) const noexcept { return values[i]; }

  WaveField& operator+=(const WaveField& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
  WaveField& operator-=(const WaveField& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  WaveField& operator*=(Complex c) {
    for (auto& v : values) v *= c;
    return *this;
  }
  friend WaveField operator+(WaveField a, const WaveField& b) { return a += b; }
  friend WaveField operator-(WaveField a, const WaveField& b) { return a -= b; }
  friend WaveField operator*(Complex c, WaveField a) { return a *= c; }

  [[nodiscard]] bool all_finite() const noexcept {
    for (const auto& v : values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }
};

/// Build a wave field by evaluating f(x) (x as an array of up to three coordinates).
template <class F>
WaveField sample_wave(const Grid& g, F&& f) {
  WaveField w(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < g.dim; ++d) x[static_cast<std::size_t>(d)] = g.coordinate(i, d);
    w[i] = Complex(f(x));
  }
  return w;
}

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int dim, std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(dim, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<int> dims(static_cast<std::size_t>(dim), static_cast<int>(n));
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= n;
    ComplexGrid scratch(total);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(dim, dims.data(), data, data, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericalError("FFTW plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans_;
};

}  // namespace detail

/// In-place unnormalized forward DFT.
inline void fft_forward(const Grid& g, std::span<Complex> data) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::PlanCache::instance().get(g.dim, g.points, FFTW_FORWARD), p, p);
}

/// In-place inverse DFT, normalized so that backward(forward(u)) == u.
inline void fft_backward(const Grid& g, std::span<Complex> data) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(detail::PlanCache::instance().get(g.dim, g.points, FFTW_BACKWARD), p, p);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

/// |k|^2 for every Fourier index.
inline RealGrid wavenumber_squared(const Grid& g) {
  RealGrid k2(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int d = 0; d < g.dim; ++d) {
      const double k = g.wavenumber(g.axis_index(i, d));
      s += k * k;
    }
    k2[i] = s;
  }
  return k2;
}

/// 2/3-rule mask: 1 where every axis frequency satisfies |m| < N/3, else 0.
inline RealGrid dealias_mask(const Grid& g) {
  RealGrid mask(g.size(), 1.0);
  const double cut = static_cast<double>(g.points) / 3.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (int d = 0; d < g.dim; ++d)
      if (std::abs(static_cast<double>(g.frequency(g.axis_index(i, d)))) >= cut) mask[i] = 0.0;
  return mask;
}

/// Spectral partial derivative along `axis`; the Nyquist coefficient is dropped.
/// If `mask` is non-empty it is applied to the derivative's spectrum.
inline ComplexGrid spectral_derivative(const Grid& g, std::span<const Complex> u, int axis,
                                       std::span<const double> mask = {}) {
  ComplexGrid w(u.begin(), u.end());
  fft_forward(g, w);
  const long nyq = -static_cast<long>(g.points) / 2;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const std::size_t ai = g.axis_index(i, axis);
    const double k = g.frequency(ai) == nyq ? 0.0 : g.wavenumber(ai);
    w[i] *= Complex(0.0, k);
    if (!mask.empty()) w[i] *= mask[i];
  }
  fft_backward(g, w);
  return w;
}

inline ComplexGrid spectral_laplacian(const Grid& g, std::span<const Complex> u) {
  ComplexGrid w(u.begin(), u.end());
  fft_forward(g, w);
  const auto k2 = wavenumber_squared(g);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= -k2[i];
  fft_backward(g, w);
  return w;
}

inline WaveField laplacian(const WaveField& u) { return {u.grid, spectral_laplacian(u.grid, u.values)}; }

inline ComplexGrid to_complex(std::span<const double> r) { return {r.begin(), r.end()}; }

inline RealGrid real_part(std::span<const Complex> c) {
  RealGrid r(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) r[i] = c[i].real();
  return r;
}

/// L^2 inner product (f, g) = integral of conj(f) g over the torus.
inline Complex inner(const WaveField& f, const WaveField& g) {
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
  return s * f.grid.cell_volume();
}

inline double norm_l2(const WaveField& f) {
  double s = 0.0;
  for (const auto& v : f.values) s += std::norm(v);
  return std::sqrt(s * f.grid.cell_volume());
}

/// Spectral H^m norm (sum over k of (1+|k|^2)^m |u_k|^2)^(1/2), with u_k the coefficients
/// in the L^2-orthonormal Fourier basis of the torus. m = 0 reproduces the L^2 norm.
inline double sobolev_norm(const Grid& g, std::span<const Complex> u, double m) {
  ComplexGrid w(u.begin(), u.end());
  for (const auto& v : w)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw DomainError("sobolev_norm: non-finite grid value");
  fft_forward(g, w);
  const auto k2 = wavenumber_squared(g);
  const double n = static_cast<double>(g.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += std::pow(1.0 + k2[i], m) * std::norm(w[i]);
  // |u_k|^2 = L^dim / N^(2 dim) |FFT_k|^2
  return std::sqrt(s * g.volume() / (n * n));
}

inline double sobolev_norm(const WaveField& u, double m) { return sobolev_norm(u.grid, u.values, m); }

inline double sobolev_norm(const Grid& g, std::span<const double> u, double m) {
  const auto c = to_complex(u);
  return sobolev_norm(g, c, m);
}

/// Free Schroedinger step exp(i tau Laplacian) applied in place.
/// `phase` caches exp(-i |k|^2 tau) for a fixed tau (see kinetic_phase).
inline void apply_kinetic(const Grid& g, std::span<Complex> u, std::span<const Complex> phase) {
  fft_forward(g, u);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= phase[i];
  fft_backward(g, u);
}

inline ComplexGrid kinetic_phase(const Grid& g, double tau) {
  const auto k2 = wavenumber_squared(g);
  ComplexGrid ph(k2.size());
  for (std::size_t i = 0; i < k2.size(); ++i) ph[i] = std::polar(1.0, -k2[i] * tau);
  return ph;
}

/// Exact free evolution over time tau.
inline WaveField free_evolution(WaveField u, double tau) {
  const auto ph = kinetic_phase(u.grid, tau);
  apply_kinetic(u.grid, u.values, ph);
  return u;
}

}  // namespace fracschrod
