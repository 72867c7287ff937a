#pragma once

// Exact sampling and statistics of scalar fractional Brownian motion, H in (1/2, 1).

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fracschrod/errors.hpp"
#include "fracschrod/rng.hpp"
#include "fracschrod/spectral.hpp"

namespace fracschrod {

enum class FbmMethod { cholesky, circulant };

inline std::string to_string(FbmMethod m) { return m == FbmMethod::cholesky ? "cholesky" : "circulant"; }

/// One sampled fBm path. values[0] == 0 and times[0] == 0.
struct FbmPath {
  double hurst = 0.75;
  std::vector<double> times;
  std::vector<double> values;
  std::uint64_t seed = 0;
  FbmMethod method = FbmMethod::cholesky;
  /// Relative negative spectral mass removed by the circulant sampler (0 if none).
  double clamped_mass = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

inline void require_hurst(double H) {
  if (!(H > 0.5 && H < 1.0)) throw DomainError("Hurst index must lie in (1/2, 1), got " + std::to_string(H));
}

/// E[B_t B_s] = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
inline double fbm_covariance(double t, double s, double H) {
  require_hurst(H);
  if (t < 0.0 || s < 0.0) throw DomainError("fbm_covariance: times must be nonnegative");
  const double h2 = 2.0 * H;
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

/// Autocovariance of unit-step fractional Gaussian noise at lag k.
inline double fgn_autocovariance(long k, double H) {
  const double h2 = 2.0 * H;
  const auto a = [h2](double x) { return std::pow(std::abs(x), h2); };
  const double kd = static_cast<double>(k);
  return 0.5 * (a(kd + 1.0) - 2.0 * a(kd) + a(kd - 1.0));
}

inline bool is_uniform_grid(std::span<const double> times, double rel_tol = 1e-9) {
  if (times.size() < 3) return true;
  const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs((times[i] - times[i - 1]) - h) > rel_tol * h) return false;
  return true;
}

/// Reusable sampler: factorizes the covariance (or the circulant embedding) once and then
/// draws independent paths for any (seed, stream) pair.
class FbmSampler {
 public:
  FbmSampler(double H, std::vector<double> times, FbmMethod method = FbmMethod::cholesky)
      : hurst_(H), times_(std::move(times)), method_(method) {
    require_hurst(H);
    if (times_.empty()) throw DomainError("sample_fbm: empty time grid");
    if (times_.front() != 0.0) throw DomainError("sample_fbm: time grid must start at 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1])) throw DomainError("sample_fbm: times must be strictly increasing");
    if (times_.size() < 2) return;
    if (method_ == FbmMethod::cholesky)
      factor_cholesky();
    else
      factor_circulant();
  }

  [[nodiscard]] FbmPath sample(std::uint64_t seed, std::uint64_t stream = 0) const {
    FbmPath path;
    path.hurst = hurst_;
    path.times = times_;
    path.seed = seed;
    path.method = method_;
    path.clamped_mass = clamped_mass_;
    path.values.assign(times_.size(), 0.0);
    if (times_.size() < 2) return path;

    auto rng = make_stream(seed, stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (method_ == FbmMethod::cholesky) {
      const auto m = static_cast<Eigen::Index>(times_.size() - 1);
      Eigen::VectorXd z(m);
      for (Eigen::Index i = 0; i < m; ++i) z[i] = normal(rng);
      const Eigen::VectorXd x = chol_.matrixL() * z;
      for (Eigen::Index i = 0; i < m; ++i) path.values[static_cast<std::size_t>(i) + 1] = x[i];
    } else {
      const std::size_t n = sqrt_eig_.size();
      ComplexGrid w(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double a = normal(rng);
        const double b = normal(rng);
        w[k] = sqrt_eig_[k] * Complex(a, b);
      }
      fft_forward(Grid{1, n, 1.0}, w);
      const std::size_t m = times_.size() - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        acc += w[j].real();
        path.values[j + 1] = acc;
      }
    }
    return path;
  }

  [[nodiscard]] double clamped_mass() const noexcept { return clamped_mass_; }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

 private:
  void factor_cholesky() {
    const auto m = static_cast<Eigen::Index>(times_.size() - 1);
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double c = fbm_covariance(times_[static_cast<std::size_t>(i) + 1],
                                        times_[static_cast<std::size_t>(j) + 1], hurst_);
        cov(i, j) = c;
        cov(j, i) = c;
      }
    chol_.compute(cov);
    if (chol_.info() != Eigen::Success) {
      throw NumericalError("sample_fbm: covariance matrix of " + std::to_string(m) +
                           " points is not positive definite at double precision (H=" +
                           std::to_string(hurst_) + "); use a coarser grid or the circulant method");
    }
  }

  // Davies-Harte: embed the fGn autocovariance in a circulant of size 2m.
  void factor_circulant() {
    if (!is_uniform_grid(times_)) throw DomainError("sample_fbm: circulant method requires a uniform grid");
    const std::size_t m = times_.size() - 1;
    const double h = times_.back() / static_cast<double>(m);
    const double scale = std::pow(h, 2.0 * hurst_);
    const std::size_t n = 2 * m;
    ComplexGrid c(n, Complex{0.0, 0.0});
    for (std::size_t j = 0; j <= m; ++j) c[j] = scale * fgn_autocovariance(static_cast<long>(j), hurst_);
    for (std::size_t j = 1; j < m; ++j) c[n - j] = c[j];
    fft_forward(Grid{1, n, 1.0}, c);
    double negative = 0.0;
    double total = 0.0;
    sqrt_eig_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double lam = c[k].real();
      total += std::abs(lam);
      if (lam < 0.0) {
        negative += -lam;
        continue;
      }
      sqrt_eig_[k] = std::sqrt(lam / static_cast<double>(n));
    }
    clamped_mass_ = total > 0.0 ? negative / total : 0.0;
  }

  double hurst_;
  std::vector<double> times_;
  FbmMethod method_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  std::vector<double> sqrt_eig_;
  double clamped_mass_ = 0.0;
};

/// Exact fBm sample on `times` (times[0] == 0). Deterministic in (H, times, seed, method, stream).
inline FbmPath sample_fbm(double H, std::vector<double> times, std::uint64_t seed,
                          FbmMethod method = FbmMethod::cholesky, std::uint64_t stream = 0) {
  return FbmSampler(H, std::move(times), method).sample(seed, stream);
}

inline std::vector<double> uniform_times(double T, std::size_t intervals) {
  std::vector<double> t(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(intervals);
  return t;
}

/// Dyadic lag window 2^j_min .. 2^j_max (in grid steps) for structure-function regression.
struct LagWindow {
  int j_min = 0;
  int j_max = 5;
};

/// Least-squares slope/2 of log(msq) against log(lag).
inline double holder_from_structure(std::span<const double> lags, std::span<const double> msq) {
  if (lags.size() != msq.size() || lags.size() < 2) throw DomainError("holder regression needs >= 2 lags");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(lags.size());
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (!(msq[i] > 0.0) || !std::isfinite(msq[i]))
      throw NumericalError("holder estimate: degenerate increments (zero or non-finite second moment)");
    const double x = std::log(lags[i]);
    const double y = std::log(msq[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return 0.5 * slope;
}

/// Second-moment structure-function estimate of the Hoelder exponent of a uniformly sampled
/// path. Lags are 2^j grid steps for j in the window.
inline double estimate_holder(std::span<const double> values, LagWindow window = {}) {
  if (window.j_min < 0 || window.j_max <= window.j_min) throw DomainError("estimate_holder: bad lag window");
  const std::size_t max_lag = std::size_t{1} << window.j_max;
  if (values.size() < 8 * max_lag)
    throw DomainError("estimate_holder: path too short for lag window (need >= 8 * max lag samples)");
  std::vector<double> lags, msq;
  for (int j = window.j_min; j <= window.j_max; ++j) {
    const std::size_t lag = std::size_t{1} << j;
    double s = 0.0;
    const std::size_t count = values.size() - lag;
    for (std::size_t k = 0; k < count; ++k) {
      const double d = values[k + lag] - values[k];
      s += d * d;
    }
    lags.push_back(static_cast<double>(lag));
    msq.push_back(s / static_cast<double>(count));
  }
  return holder_from_structure(lags, msq);
}

inline double estimate_holder(const FbmPath& path, LagWindow window = {}) {
  return estimate_holder(std::span<const double>(path.values), window);
}

/// Two-column CSV (time,value).
inline void write_csv(std::ostream& os, const FbmPath& path) {
  os << "time,value\n";
  os.precision(17);
  for (std::size_t i = 0; i < path.size(); ++i) os << path.times[i] << ',' << path.values[i] << '\n';
}

}  // namespace fracschrod
