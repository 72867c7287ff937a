#pragma once

// Q-fractional noise B(t,x) = sum_p lambda_p e_p(x) beta_p(t) on a periodic grid.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fracschrod/errors.hpp"
#include "fracschrod/fbm.hpp"
#include "fracschrod/spectral.hpp"

namespace fracschrod {

enum class ModeShape { constant, cosine, sine };

/// One real Fourier eigenfunction of Q, L^2-normalized on the torus.
struct NoiseMode {
  std::array<long, 3> freq{0, 0, 0};  // integer wavevector m, k = 2 pi m / L
  ModeShape shape = ModeShape::constant;
  double amplitude = 0.0;  // lambda_p = sqrt(mu_p)
};

struct NoiseSpectrum {
  int dim = 1;
  double length = 2.0 * std::numbers::pi;
  double decay = 7.0;   // s in lambda_p = (1 + |k_p|^2)^{-s/2}
  int sobolev_q = 0;    // V = H^{q+4}
  std::vector<NoiseMode> modes;
  /// Running sums of lambda_p ||e_p||_{H^{q+4}}; back() is the reported summability value.
  std::vector<double> partial_sums;

  [[nodiscard]] std::size_t size() const noexcept { return modes.size(); }

  [[nodiscard]] double k_squared(std::size_t p) const noexcept {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double k = 2.0 * std::numbers::pi * static_cast<double>(modes[p].freq[static_cast<std::size_t>(d)]) / length;
      s += k * k;
    }
    return s;
  }
  /// ||e_p||_{H^m} = (1 + |k_p|^2)^{m/2} for normalized Fourier modes.
  [[nodiscard]] double mode_sobolev_norm(std::size_t p, double m) const noexcept {
    return std::pow(1.0 + k_squared(p), 0.5 * m);
  }
  [[nodiscard]] double summability() const noexcept { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
};

/// Smallest admissible decay exponent: s must exceed q + 4 + n/2 + 1.
inline double min_decay(int dim, int q) { return q + 4.0 + 0.5 * dim + 1.0; }

/// First P real Fourier modes ordered by |m|^2 (then lexicographically), cosine before sine,
/// with lambda_p = amplitude * (1 + |k_p|^2)^{-s/2}.
inline NoiseSpectrum build_spectrum(int dim, double length, std::size_t P, double decay, int q,
                                    double amplitude = 1.0) {
  if (dim < 1 || dim > 3) throw ConfigError("noise dimension must be 1, 2 or 3");
  if (!(length > 0.0)) throw ConfigError("noise box length must be positive");
  if (P < 1) throw ConfigError("noise mode count P must be >= 1");
  if (q < 0) throw ConfigError("sobolev order q must be >= 0");
  if (!(amplitude >= 0.0)) throw ConfigError("noise amplitude must be nonnegative");
  if (!(decay > min_decay(dim, q))) {
    throw ConfigError("noise decay s = " + std::to_string(decay) + " too small: summability of lambda_p ||e_p||_{H^" +
                      std::to_string(q + 4) + "} requires s > q + 4 + n/2 + 1 = " +
                      std::to_string(min_decay(dim, q)));
  }

  // Half-space representatives: first nonzero component positive.
  auto representative = [dim](const std::array<long, 3>& m) {
    for (int d = 0; d < dim; ++d) {
      const long v = m[static_cast<std::size_t>(d)];
      if (v != 0) return v > 0;
    }
    return false;
  };
  auto norm2 = [](const std::array<long, 3>& m) { return m[0] * m[0] + m[1] * m[1] + m[2] * m[2]; };

  std::vector<NoiseMode> modes;
  for (long radius = 1;; radius *= 2) {
    std::vector<std::array<long, 3>> cands;
    const long r1 = dim > 1 ? radius : 0;
    const long r2 = dim > 2 ? radius : 0;
    for (long a = -radius; a <= radius; ++a)
      for (long b = -r1; b <= r1; ++b)
        for (long c = -r2; c <= r2; ++c) {
          std::array<long, 3> m{a, b, c};
          if (norm2(m) <= radius * radius && representative(m)) cands.push_back(m);
        }
    std::sort(cands.begin(), cands.end(), [&](const auto& x, const auto& y) {
      return norm2(x) != norm2(y) ? norm2(x) < norm2(y) : x < y;
    });
    modes.clear();
    modes.push_back({{0, 0, 0}, ModeShape::constant, 0.0});
    for (const auto& m : cands) {
      modes.push_back({m, ModeShape::cosine, 0.0});
      modes.push_back({m, ModeShape::sine, 0.0});
    }
    // every |m| <= radius is enumerated, so the ordering is final when the P-th mode lies inside
    if (modes.size() >= P && norm2(modes[P - 1].freq) < radius * radius) break;
  }
  modes.resize(P);

  NoiseSpectrum spec;
  spec.dim = dim;
  spec.length = length;
  spec.decay = decay;
  spec.sobolev_q = q;
  spec.modes = std::move(modes);
  double acc = 0.0;
  for (std::size_t p = 0; p < spec.modes.size(); ++p) {
    spec.modes[p].amplitude = amplitude * std::pow(1.0 + spec.k_squared(p), -0.5 * decay);
    acc += spec.modes[p].amplitude * spec.mode_sobolev_norm(p, q + 4.0);
    spec.partial_sums.push_back(acc);
  }
  return spec;
}

/// Grid evaluation of B, grad B and Laplacian B at one time.
struct NoiseSnapshot {
  RealGrid value;
  std::vector<RealGrid> gradient;
  RealGrid laplacian;
};

/// Sampled Q-fBm field on a uniform time grid with per-mode fBm paths.
class NoiseField {
 public:
  NoiseField(NoiseSpectrum spectrum, Grid grid, std::vector<FbmPath> paths)
      : spectrum_(std::move(spectrum)), grid_(grid), paths_(std::move(paths)) {
    if (paths_.size() != spectrum_.size()) throw DomainError("noise field: one fBm path per mode required");
    if (grid_.dim != spectrum_.dim || grid_.length != spectrum_.length)
      throw DomainError("noise field: spatial grid does not match spectrum geometry");
    for (const auto& m : spectrum_.modes)
      for (int d = 0; d < grid_.dim; ++d)
        if (2 * std::abs(m.freq[static_cast<std::size_t>(d)]) >= static_cast<long>(grid_.points))
          throw ConfigError("noise mode frequency not resolved by the spatial grid (need |m| < N/2); "
                            "increase N or reduce P");
    for (const auto& p : paths_)
      if (p.times != paths_.front().times) throw DomainError("noise field: mode paths on different time grids");
    tabulate_modes();
  }

  [[nodiscard]] const NoiseSpectrum& spectrum() const noexcept { return spectrum_; }
  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return paths_.front().times; }
  [[nodiscard]] std::size_t steps() const noexcept { return times().size() - 1; }
  [[nodiscard]] double time_step() const noexcept { return times().back() / static_cast<double>(steps()); }
  [[nodiscard]] double horizon() const noexcept { return times().back(); }
  [[nodiscard]] const std::vector<FbmPath>& paths() const noexcept { return paths_; }
  [[nodiscard]] double beta(std::size_t p, std::size_t k) const noexcept { return paths_[p].values[k]; }
  [[nodiscard]] const RealGrid& mode_values(std::size_t p) const noexcept { return mode_values_[p]; }
  [[nodiscard]] const RealGrid& mode_gradient(std::size_t p, int axis) const noexcept {
    return mode_grad_[p][static_cast<std::size_t>(axis)];
  }
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  /// B(t_k, .) on the grid.
  [[nodiscard]] RealGrid value(std::size_t k) const {
    RealGrid b(grid_.size(), 0.0);
    for (std::size_t p = 0; p < paths_.size(); ++p) {
      const double c = spectrum_.modes[p].amplitude * beta(p, k);
      if (c == 0.0) continue;
      const auto& e = mode_values_[p];
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += c * e[i];
    }
    return b;
  }

  [[nodiscard]] NoiseSnapshot snapshot(std::size_t k) const {
    NoiseSnapshot s;
    s.value.assign(grid_.size(), 0.0);
    s.laplacian.assign(grid_.size(), 0.0);
    s.gradient.assign(static_cast<std::size_t>(grid_.dim), RealGrid(grid_.size(), 0.0));
    for (std::size_t p = 0; p < paths_.size(); ++p) {
      const double c = spectrum_.modes[p].amplitude * beta(p, k);
      if (c == 0.0) continue;
      const double k2 = spectrum_.k_squared(p);
      const auto& e = mode_values_[p];
      for (std::size_t i = 0; i < e.size(); ++i) {
        s.value[i] += c * e[i];
        s.laplacian[i] -= c * k2 * e[i];
      }
      for (int d = 0; d < grid_.dim; ++d) {
        const auto& g = mode_grad_[p][static_cast<std::size_t>(d)];
        auto& out = s.gradient[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < g.size(); ++i) out[i] += c * g[i];
      }
    }
    return s;
  }

  /// Same paths restricted to every `stride`-th time.
  [[nodiscard]] NoiseField subsample(std::size_t stride) const {
    if (stride == 0 || steps() % stride != 0) throw DomainError("subsample: stride must divide the step count");
    std::vector<FbmPath> out = paths_;
    for (auto& p : out) {
      std::vector<double> t, v;
      for (std::size_t k = 0; k < p.times.size(); k += stride) {
        t.push_back(p.times[k]);
        v.push_back(p.values[k]);
      }
      p.times = std::move(t);
      p.values = std::move(v);
    }
    return NoiseField(spectrum_, grid_, std::move(out));
  }

  /// Copy with replaced mode paths (same time grid).
  [[nodiscard]] NoiseField with_paths(std::vector<FbmPath> paths) const {
    return NoiseField(spectrum_, grid_, std::move(paths));
  }

 private:
  void tabulate_modes() {
    const double norm = std::pow(spectrum_.length, -0.5 * spectrum_.dim);
    const std::size_t n = grid_.size();
    mode_values_.assign(spectrum_.size(), RealGrid(n, 0.0));
    mode_grad_.assign(spectrum_.size(),
                      std::vector<RealGrid>(static_cast<std::size_t>(grid_.dim), RealGrid(n, 0.0)));
    for (std::size_t p = 0; p < spectrum_.size(); ++p) {
      const auto& mode = spectrum_.modes[p];
      std::array<double, 3> k{0.0, 0.0, 0.0};
      for (int d = 0; d < grid_.dim; ++d)
        k[static_cast<std::size_t>(d)] =
            2.0 * std::numbers::pi * static_cast<double>(mode.freq[static_cast<std::size_t>(d)]) / grid_.length;
      for (std::size_t i = 0; i < n; ++i) {
        double phase = 0.0;
        for (int d = 0; d < grid_.dim; ++d) phase += k[static_cast<std::size_t>(d)] * grid_.coordinate(i, d);
        double v = 0.0, dv = 0.0;  // value and derivative factor along k
        switch (mode.shape) {
          case ModeShape::constant:
            v = norm;
            break;
          case ModeShape::cosine:
            v = std::numbers::sqrt2 * norm * std::cos(phase);
            dv = -std::numbers::sqrt2 * norm * std::sin(phase);
            break;
          case ModeShape::sine:
            v = std::numbers::sqrt2 * norm * std::sin(phase);
            dv = std::numbers::sqrt2 * norm * std::cos(phase);
            break;
        }
        mode_values_[p][i] = v;
        for (int d = 0; d < grid_.dim; ++d)
          mode_grad_[p][static_cast<std::size_t>(d)][i] = k[static_cast<std::size_t>(d)] * dv;
      }
    }
  }

  NoiseSpectrum spectrum_;
  Grid grid_;
  std::vector<FbmPath> paths_;
  std::vector<RealGrid> mode_values_;
  std::vector<std::vector<RealGrid>> mode_grad_;
  std::vector<std::string> warnings_;
};

/// Paths up to this many intervals use the dense Cholesky sampler, longer ones the circulant one.
inline constexpr std::size_t kCholeskyMaxIntervals = 1024;

/// Independent fBm per mode (stream p of `seed`) on the uniform grid `times`.
inline NoiseField sample_field(const NoiseSpectrum& spectrum, const Grid& grid, double hurst,
                               std::vector<double> times, std::uint64_t seed) {
  grid.validate();
  if (!is_uniform_grid(times)) throw DomainError("sample_field: time grid must be uniform");
  const auto method = times.size() - 1 <= kCholeskyMaxIntervals ? FbmMethod::cholesky : FbmMethod::circulant;
  const FbmSampler sampler(hurst, std::move(times), method);
  std::vector<FbmPath> paths;
  paths.reserve(spectrum.size());
  for (std::size_t p = 0; p < spectrum.size(); ++p) paths.push_back(sampler.sample(seed, p));
  return NoiseField(spectrum, grid, std::move(paths));
}

/// Discrete Hoelder seminorm max |f(t_i) - f(t_j)| / |t_i - t_j|^gamma over grid pairs.
inline double holder_seminorm(std::span<const double> values, std::span<const double> times, double gamma) {
  double best = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      best = std::max(best, std::abs(values[j] - values[i]) / std::pow(times[j] - times[i], gamma));
  return best;
}

/// Discrete analog of K(omega): sum_p lambda_p ||e_p||_V (sup|beta_p| + [beta_p]_gamma).
inline double noise_holder_constant(const NoiseField& field, double gamma) {
  const auto& spec = field.spectrum();
  double k = 0.0;
  for (std::size_t p = 0; p < spec.size(); ++p) {
    const auto& path = field.paths()[p];
    double sup = 0.0;
    for (double v : path.values) sup = std::max(sup, std::abs(v));
    k += spec.modes[p].amplitude * spec.mode_sobolev_norm(p, spec.sobolev_q + 4.0) *
         (sup + holder_seminorm(path.values, path.times, gamma));
  }
  return k;
}

/// C^1 time mollification of one path on its uniform grid: piecewise-linear interpolation
/// through knots spaced eps apart (plus the final time), then each interior corner is
/// replaced by its box average of half-width a quarter of the shorter adjacent window.
/// Returns the input unchanged when eps is below the grid spacing.
inline std::vector<double> mollify_values(std::span<const double> values, double dt, double eps) {
  std::vector<double> out(values.begin(), values.end());
  if (values.size() < 3 || eps < dt) return out;
  const std::size_t last = values.size() - 1;
  const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(eps / dt)));
  std::vector<std::size_t> knots;
  for (std::size_t k = 0; k < last; k += width) knots.push_back(k);
  knots.push_back(last);

  for (std::size_t a = 0; a + 1 < knots.size(); ++a) {
    const std::size_t i0 = knots[a], i1 = knots[a + 1];
    for (std::size_t i = i0; i <= i1; ++i) {
      const double w = static_cast<double>(i - i0) / static_cast<double>(i1 - i0);
      out[i] = (1.0 - w) * values[i0] + w * values[i1];
    }
  }
  for (std::size_t a = 1; a + 1 < knots.size(); ++a) {
    const std::size_t kl = knots[a - 1], kc = knots[a], kr = knots[a + 1];
    const double left = static_cast<double>(kc - kl) * dt, right = static_cast<double>(kr - kc) * dt;
    const double ml = (values[kc] - values[kl]) / left;
    const double mr = (values[kr] - values[kc]) / right;
    const double rho = 0.25 * std::min(left, right);
    const auto reach = static_cast<std::size_t>(std::floor(rho / dt));
    for (std::size_t i = kc - std::min(reach, kc); i <= std::min(kc + reach, last); ++i) {
      const double u = (static_cast<double>(i) - static_cast<double>(kc)) * dt;
      if (std::abs(u) > rho) continue;
      out[i] = values[kc] + ml * u + (mr - ml) * (u + rho) * (u + rho) / (4.0 * rho);
    }
  }
  out[0] = values[0];
  return out;
}

/// Field with every beta_p replaced by its eps-mollification.
inline NoiseField mollify_field(const NoiseField& field, double eps) {
  if (!(eps > 0.0)) throw DomainError("mollify_field: eps must be positive");
  const double dt = field.time_step();
  std::vector<FbmPath> paths = field.paths();
  for (auto& p : paths) p.values = mollify_values(p.values, dt, eps);
  NoiseField out = field.with_paths(std::move(paths));
  if (eps < dt) out.add_warning("mollify_field: eps below time-grid spacing, field returned unchanged");
  return out;
}

/// sup over grid times of ||B_a(t) - B_b(t)||_{H^m}, exact through the mode expansion.
inline double field_gap_sobolev(const NoiseField& a, const NoiseField& b, double m) {
  const auto& spec = a.spectrum();
  double best = 0.0;
  for (std::size_t k = 0; k < a.times().size(); ++k) {
    double s = 0.0;
    for (std::size_t p = 0; p < spec.size(); ++p) {
      const double c = spec.modes[p].amplitude * (a.beta(p, k) - b.beta(p, k));
      s += c * c * std::pow(1.0 + spec.k_squared(p), m);
    }
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

/// Flat little-endian float64 dump (row-major grid order).
inline void write_flat_binary(std::ostream& os, std::span<const double> data) {
  static_assert(std::endian::native == std::endian::little, "flat binary writer assumes a little-endian host");
  os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
}

/// Complex grids are written as interleaved (re, im) float64 pairs.
inline void write_flat_binary(std::ostream& os, std::span<const Complex> data) {
  static_assert(sizeof(Complex) == 2 * sizeof(double));
  write_flat_binary(os, std::span<const double>(reinterpret_cast<const double*>(data.data()), 2 * data.size()));
}

/// Snapshot CSV: grid coordinates, then B, grad B components, Laplacian B.
inline void write_csv(std::ostream& os, const Grid& g, const NoiseSnapshot& s) {
  static constexpr const char* axes[] = {"x", "y", "z"};
  for (int d = 0; d < g.dim; ++d) os << axes[d] << ',';
  os << "B";
  for (int d = 0; d < g.dim; ++d) os << ",dB_d" << axes[d];
  os << ",lapB\n";
  os.precision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int d = 0; d < g.dim; ++d) os << g.coordinate(i, d) << ',';
    os << s.value[i];
    for (int d = 0; d < g.dim; ++d) os << ',' << s.gradient[static_cast<std::size_t>(d)][i];
    os << ',' << s.laplacian[i] << '\n';
  }
}

}  // namespace fracschrod
