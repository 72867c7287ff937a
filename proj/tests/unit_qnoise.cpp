#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fracschrod/qnoise.hpp"

using namespace fracschrod;

namespace {

constexpr double kPi = std::numbers::pi;

double direct_l2(const Grid& g, const ComplexGrid& u) {
  double s = 0.0;
  for (const auto& v : u) s += std::norm(v);
  return std::sqrt(s * g.cell_volume());
}

}  // namespace

TEST(Spectrum, SingleModeSum) {
  const auto s = build_spectrum(1, 2 * kPi, 1, 7.0, 0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.modes[0].amplitude, 1.0);
  EXPECT_DOUBLE_EQ(s.summability(), 1.0);
  EXPECT_DOUBLE_EQ(s.mode_sobolev_norm(0, 9.0), 1.0);
}

TEST(Spectrum, TailSumConverges) {
  const auto s = build_spectrum(1, 2 * kPi, 64, 7.0, 0);
  EXPECT_LT(std::abs(s.partial_sums[63] - s.partial_sums[31]) / s.partial_sums[63], 0.01);
  // independent summation: constant, then pairs at |m| = 1..
  double direct = 1.0;
  for (int m = 1; 2 * m <= 63; ++m) direct += 2.0 * std::pow(1.0 + m * m, (4.0 - 7.0) / 2.0);
  direct += std::pow(1.0 + 32.0 * 32.0, -1.5);  // the 64th mode is the cosine at |m| = 32
  EXPECT_NEAR(s.summability(), direct, 1e-12);
}

TEST(Spectrum, OrderingAndAmplitudes) {
  const auto s = build_spectrum(2, 2 * kPi, 9, 8.0, 0);
  EXPECT_EQ(s.modes[0].shape, ModeShape::constant);
  for (std::size_t p = 1; p < s.size(); ++p) EXPECT_LE(s.modes[p].amplitude, s.modes[p - 1].amplitude + 1e-15);
  EXPECT_EQ(s.modes[1].shape, ModeShape::cosine);
  EXPECT_EQ(s.modes[2].shape, ModeShape::sine);
  EXPECT_EQ(s.modes[1].freq, s.modes[2].freq);
}

TEST(Spectrum, DecayBoundIsEnforced) {
  EXPECT_THROW(build_spectrum(1, 2 * kPi, 4, 5.5, 0), ConfigError);
  EXPECT_THROW(build_spectrum(3, 2 * kPi, 4, 6.4, 0), ConfigError);
  EXPECT_NO_THROW(build_spectrum(3, 2 * kPi, 4, 7.0, 0));
  try {
    build_spectrum(1, 2 * kPi, 4, 5.0, 0);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("5.5"), std::string::npos);
  }
}

TEST(SobolevNorm, ConstantFunction) {
  const Grid g{1, 16, 1.0};
  const ComplexGrid u(16, Complex(3.0, -4.0));
  EXPECT_NEAR(sobolev_norm(g, u, 0.0), 5.0, 1e-13);
  EXPECT_NEAR(sobolev_norm(g, u, 3.0), 5.0, 1e-13);
}

TEST(SobolevNorm, SingleModeAndParseval) {
  const Grid g{2, 32, 3.0};
  const double k = 2 * kPi * 2 / 3.0;
  auto u = sample_wave(g, [&](auto x) { return std::numbers::sqrt2 / 3.0 * std::cos(k * x[0]); });
  EXPECT_NEAR(sobolev_norm(u, 1.0), std::sqrt(1.0 + k * k), 1e-12);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (auto& v : u.values) v = Complex(n(rng), n(rng));
  EXPECT_NEAR(sobolev_norm(u, 0.0), direct_l2(g, u.values), 1e-12 * direct_l2(g, u.values));
}

TEST(SobolevNorm, RejectsNonFinite) {
  const Grid g{1, 8, 1.0};
  ComplexGrid u(8);
  u[3] = Complex(NAN, 0.0);
  EXPECT_THROW(sobolev_norm(g, u, 0.0), DomainError);
}

TEST(NoiseField, ConstantModeIsSpatiallyFlat) {
  const Grid g{1, 32, 2 * kPi};
  const auto spec = build_spectrum(1, 2 * kPi, 1, 7.0, 0);
  const auto f = sample_field(spec, g, 0.75, uniform_times(1.0, 16), 9);
  const double e0 = 1.0 / std::sqrt(2 * kPi);
  for (std::size_t k = 0; k <= 16; ++k) {
    const auto s = f.snapshot(k);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(s.value[i], e0 * f.beta(0, k), 1e-15);
      EXPECT_EQ(s.gradient[0][i], 0.0);
      EXPECT_EQ(s.laplacian[i], 0.0);
    }
  }
}

TEST(NoiseField, ZeroAtStartAndDeterministic) {
  const Grid g{2, 16, 2 * kPi};
  const auto spec = build_spectrum(2, 2 * kPi, 9, 8.0, 0);
  const auto a = sample_field(spec, g, 0.75, uniform_times(1.0, 8), 1);
  const auto b = sample_field(spec, g, 0.75, uniform_times(1.0, 8), 1);
  const auto c = sample_field(spec, g, 0.75, uniform_times(1.0, 8), 2);
  for (double v : a.value(0)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(a.value(5), b.value(5));
  EXPECT_NE(a.value(5), c.value(5));
}

// Cached gradient and Laplacian agree with FFT derivatives of the cached value.
TEST(NoiseField, DerivativesMatchSpectralDerivatives) {
  const Grid g{2, 32, 5.0};
  const auto spec = build_spectrum(2, 5.0, 13, 8.0, 0, 3.0);
  const auto f = sample_field(spec, g, 0.8, uniform_times(1.0, 4), 4);
  const auto s = f.snapshot(3);
  const auto b = to_complex(s.value);
  for (int d = 0; d < 2; ++d) {
    const auto db = spectral_derivative(g, b, d);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(db[i].real(), s.gradient[static_cast<std::size_t>(d)][i], 1e-11);
  }
  const auto lb = spectral_laplacian(g, b);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(lb[i].real(), s.laplacian[i], 1e-10);
}

// Centered fourth-order differences converge to the cached gradient.
TEST(NoiseField, FiniteDifferenceGradient) {
  const auto spec = build_spectrum(1, 2 * kPi, 5, 7.0, 0);
  double prev = 1e300;
  for (std::size_t n : {32u, 64u, 128u}) {
    const Grid g{1, n, 2 * kPi};
    const auto f = sample_field(spec, g, 0.75, uniform_times(1.0, 4), 8);
    const auto s = f.snapshot(4);
    const double h = g.spacing();
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto at = [&](long o) { return s.value[static_cast<std::size_t>((static_cast<long>(i) + o + static_cast<long>(n)) % static_cast<long>(n))]; };
      const double fd = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
      err = std::max(err, std::abs(fd - s.gradient[0][i]));
    }
    EXPECT_LT(err, prev / 8.0);
    prev = err;
  }
}

TEST(NoiseField, UnresolvedModeIsRejected) {
  const auto spec = build_spectrum(1, 2 * kPi, 17, 7.0, 0);  // |m| up to 8
  EXPECT_THROW(sample_field(spec, Grid{1, 16, 2 * kPi}, 0.75, uniform_times(1.0, 4), 1), ConfigError);
}

// Var B(t,x) = t^{2H} sum_p lambda_p^2 e_p(x)^2
TEST(NoiseField, PointwiseVariance) {
  const Grid g{1, 16, 2 * kPi};
  const auto spec = build_spectrum(1, 2 * kPi, 5, 7.0, 0, 4.0);
  const double H = 0.75;
  const int runs = 3000;
  const std::size_t x = 3, k = 8;
  double acc = 0.0;
  for (int r = 0; r < runs; ++r) {
    const auto f = sample_field(spec, g, H, uniform_times(1.0, 8), 1000 + static_cast<std::uint64_t>(r));
    acc += std::pow(f.value(k)[x], 2);
  }
  const auto f = sample_field(spec, g, H, uniform_times(1.0, 8), 0);
  double expect = 0.0;
  for (std::size_t p = 0; p < spec.size(); ++p) expect += std::pow(spec.modes[p].amplitude * f.mode_values(p)[x], 2);
  EXPECT_NEAR(acc / runs / expect, 1.0, 0.08);
}

TEST(NoiseField, SubsampleKeepsPath) {
  const Grid g{1, 16, 2 * kPi};
  const auto spec = build_spectrum(1, 2 * kPi, 3, 7.0, 0);
  const auto f = sample_field(spec, g, 0.75, uniform_times(1.0, 16), 1);
  const auto c = f.subsample(4);
  EXPECT_EQ(c.steps(), 4u);
  EXPECT_EQ(c.value(2), f.value(8));
  EXPECT_THROW(f.subsample(3), DomainError);
}

TEST(Mollify, BelowGridIsIdentityWithWarning) {
  const Grid g{1, 16, 2 * kPi};
  const auto spec = build_spectrum(1, 2 * kPi, 3, 7.0, 0);
  const auto f = sample_field(spec, g, 0.75, uniform_times(1.0, 64), 1);
  const auto m = mollify_field(f, 1e-4);
  for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(m.paths()[p].values, f.paths()[p].values);
  EXPECT_EQ(m.warnings().size(), 1u);
  EXPECT_THROW(mollify_field(f, 0.0), DomainError);
}

TEST(Mollify, FullIntervalIsAffine) {
  const auto t = uniform_times(1.0, 256);
  const auto p = sample_fbm(0.75, t, 3);
  const auto m = mollify_values(p.values, 1.0 / 256, 1.0);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(m[k], t[k] * p.values.back(), 1e-14);
  EXPECT_LE(holder_seminorm(m, t, 0.6), holder_seminorm(p.values, t, 0.6) + 1e-14);
}

TEST(Mollify, HolderNormDoesNotIncrease) {
  const auto t = uniform_times(1.0, 512);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = sample_fbm(0.75, t, seed);
    for (double eps : {1.0 / 4, 1.0 / 16, 1.0 / 64, 1.0 / 128}) {
      const auto m = mollify_values(p.values, 1.0 / 512, eps);
      EXPECT_EQ(m[0], 0.0);
      for (double gamma : {0.5, 0.6, 0.7})
        EXPECT_LE(holder_seminorm(m, t, gamma), holder_seminorm(p.values, t, gamma) * (1 + 1e-12));
    }
  }
}

TEST(Mollify, ContinuouslyDifferentiableAtKnots) {
  // one knot at t = 0.5: slopes on both sides of the fillet match the affine pieces
  const auto t = uniform_times(1.0, 1024);
  std::vector<double> v(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) v[k] = std::abs(t[k] - 0.5);
  const auto m = mollify_values(v, 1.0 / 1024, 0.5);
  double max_jump = 0.0;
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    const double dl = (m[k] - m[k - 1]) * 1024, dr = (m[k + 1] - m[k]) * 1024;
    max_jump = std::max(max_jump, std::abs(dr - dl));
  }
  EXPECT_LT(max_jump, 0.05);
}

TEST(Mollify, GapShrinksWithEps) {
  const Grid g{1, 32, 2 * kPi};
  const auto spec = build_spectrum(1, 2 * kPi, 9, 7.0, 0);
  const auto f = sample_field(spec, g, 0.75, uniform_times(1.0, 1024), 11);
  double prev = 1e300;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const double gap = field_gap_sobolev(mollify_field(f, eps), f, 4.0);
    EXPECT_LE(gap, prev);
    prev = gap;
  }
  EXPECT_EQ(field_gap_sobolev(mollify_field(f, 1e-5), f, 4.0), 0.0);
}

TEST(NoiseExport, FlatBinaryAndCsv) {
  std::ostringstream bin;
  const std::vector<double> d{1.0, 2.0};
  write_flat_binary(bin, std::span<const double>(d));
  EXPECT_EQ(bin.str().size(), 16u);
  const Grid g{1, 4, 1.0};
  const auto spec = build_spectrum(1, 1.0, 1, 7.0, 0);
  const auto f = sample_field(spec, g, 0.75, uniform_times(1.0, 2), 1);
  std::ostringstream csv;
  write_csv(csv, g, f.snapshot(1));
  EXPECT_EQ(csv.str().rfind("x,B,dB_dx,lapB\n", 0), 0u);
}
