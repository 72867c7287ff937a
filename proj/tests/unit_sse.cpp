#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracschrod/fbm.hpp"
#include "fracschrod/sse.hpp"

using namespace fracschrod;

namespace {

constexpr double kPi = std::numbers::pi;

WaveField packet(const Grid& g, double x0, double width, double kx) {
  return sample_wave(g, [&](const std::array<double, 3>& x) {
    return std::exp(-(x[0] - x0) * (x[0] - x0) / (2 * width * width)) * std::polar(1.0, kx * x[0]);
  });
}

NoiseField make_field(const Grid& g, std::size_t P, std::size_t steps, double T, std::uint64_t seed) {
  const auto spec = build_spectrum(g.dim, g.length, P, 7.5, 0);
  return sample_field(spec, g, 0.75, uniform_times(T, steps), seed);
}

NoiseField zero_field(const NoiseField& f) {
  auto paths = f.paths();
  for (auto& p : paths) std::fill(p.values.begin(), p.values.end(), 0.0);
  return f.with_paths(std::move(paths));
}

// sech(x - x0) e^{it} solves i Psi_t = -Psi_xx - 2 |Psi|^2 Psi
WaveField soliton(const Grid& g, double x0, double t) {
  return sample_wave(g, [&](const std::array<double, 3>& x) { return std::polar(1.0 / std::cosh(x[0] - x0), t); });
}

}  // namespace

TEST(Sse, StepLayoutChecks) {
  const Grid g{1, 32, 2 * kPi};
  const auto field = make_field(g, 4, 64, 1.0, 1);
  const auto psi0 = packet(g, kPi, 0.5, 0.0);
  const auto none = NonlinearitySpec::none();
  EXPECT_THROW(solve_direct(psi0, field, none, 0.01, 0.5), ConfigError);
  EXPECT_THROW(solve_direct(psi0, field, none, 1.0 / 32, 2.0), ConfigError);
  EXPECT_THROW(solve_direct(psi0, field, none, 1.0 / 32, 0.3), ConfigError);
  const auto tr = solve_direct(psi0, field, none, 1.0 / 32, 0.5, {"abc"});
  EXPECT_EQ(tr.size(), 17u);
  EXPECT_EQ(tr.stride, 2u);
  EXPECT_EQ(tr.provenance.route, "direct");
  EXPECT_EQ(tr.provenance.config_hash, "abc");
  EXPECT_EQ(tr.provenance.seed, field.paths().front().seed);
  EXPECT_DOUBLE_EQ(tr.times.back(), 0.5);
}

TEST(Sse, SolitonOracleSecondOrder) {
  const Grid g{1, 256, 16 * kPi};
  const double T = 0.5;
  const auto spec = NonlinearitySpec::power(1.0, -2.0);
  auto err = [&](std::size_t steps, bool gauge) {
    const auto field = zero_field(make_field(g, 2, steps, T, 2));
    const auto psi0 = soliton(g, 8 * kPi, 0.0);
    const auto tr = gauge ? solve_gauge(psi0, field, spec, T / static_cast<double>(steps) * 2, T, Scheme::crank_nicolson_mag)
                          : solve_direct(psi0, field, spec, T / static_cast<double>(steps), T);
    return norm_l2(tr.back() - soliton(g, 8 * kPi, T));
  };
  const double d1 = err(64, false), d2 = err(128, false);
  EXPECT_LT(d2, 1e-3);
  EXPECT_NEAR(std::log2(d1 / d2), 2.0, 0.25);
  const double c1 = err(128, true), c2 = err(256, true);
  EXPECT_LT(c2, 1e-3);
  EXPECT_NEAR(std::log2(c1 / c2), 2.0, 0.25);
}

TEST(Sse, StrangRoutesAgreeToRoundoff) {
  // the gauge phases of the strang route cancel exactly against the transform
  const Grid g{1, 64, 8 * kPi};
  const auto field = make_field(g, 8, 64, 0.5, 3);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  const auto spec = NonlinearitySpec::power(1.0, 1.0);
  const auto a = solve_direct(psi0, field, spec, 1.0 / 128, 0.5);
  const auto b = solve_gauge(psi0, field, spec, 1.0 / 128, 0.5, Scheme::strang_gauge);
  EXPECT_LT(norm_l2(a.back() - b.back()), 1e-12);
}

TEST(Sse, ChargeIsConserved) {
  const Grid g{1, 64, 8 * kPi};
  const auto field = make_field(g, 8, 64, 0.5, 4);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  const double n0 = norm_l2(psi0);
  const auto spec = NonlinearitySpec::power(1.0, -1.0);
  for (const auto& tr : {solve_direct(psi0, field, spec, 1.0 / 128, 0.5),
                         solve_gauge(psi0, field, spec, 1.0 / 64, 0.5, Scheme::crank_nicolson_mag)})
    for (const auto& u : tr.states) EXPECT_NEAR(norm_l2(u), n0, 1e-11);
}

TEST(Sse, CrankNicolsonRouteConvergesToDirect) {
  const Grid g{1, 64, 8 * kPi};
  const auto field = make_field(g, 8, 256, 0.5, 5);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  const auto spec = NonlinearitySpec::power(1.0, 1.0);
  const auto ref = solve_direct(psi0, field, spec, 1.0 / 512, 0.5);
  auto gap = [&](double dt) {
    return norm_l2(solve_gauge(psi0, field, spec, dt, 0.5, Scheme::crank_nicolson_mag).back() - ref.back());
  };
  const double a = gap(1.0 / 64), b = gap(1.0 / 128), c = gap(1.0 / 256);
  EXPECT_LT(b, a);
  EXPECT_LT(c, b);
}

TEST(Sse, DuhamelResidualVanishesForMatchingScheme) {
  const Grid g{1, 64, 8 * kPi};
  const auto field = make_field(g, 8, 64, 0.5, 6);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  // linear: the representation formula is the scheme itself
  const auto lin = solve_gauge(psi0, field, NonlinearitySpec::none(), 1.0 / 128, 0.5, Scheme::strang_gauge);
  for (double r : duhamel_residual(lin, field, NonlinearitySpec::none())) EXPECT_LT(r, 1e-12);
  // nonlinear: residual is a time discretization error and shrinks with dt
  const auto spec = NonlinearitySpec::power(1.0, 1.0);
  auto worst = [&](double dt) {
    const auto tr = solve_gauge(psi0, field, spec, dt, 0.5, Scheme::strang_gauge);
    const auto r = duhamel_residual(tr, field, spec);
    return *std::max_element(r.begin(), r.end());
  };
  const double a = worst(1.0 / 32), b = worst(1.0 / 128);
  EXPECT_LT(b, a / 8);
}

TEST(Sse, WeakFormWithoutNoiseMatchesTrapezoidOrder) {
  const Grid g{1, 64, 8 * kPi};
  const auto spec = NonlinearitySpec::power(1.0, 1.0);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  const auto w0 = packet(g, 4 * kPi + 0.5, 1.5, 0.0);
  TestFunction w{[&](double t) { return Complex(std::cos(t)) * w0; }, [&](double t) { return Complex(-std::sin(t)) * w0; }};
  auto res = [&](std::size_t steps) {
    const auto field = zero_field(make_field(g, 4, steps, 0.5, 7));
    const auto tr = solve_direct(psi0, field, spec, 0.5 / static_cast<double>(steps), 0.5);
    return weak_form_residual(tr, field, spec, w, FracConfig{});
  };
  const double a = res(64), b = res(128);
  EXPECT_LT(b, 1e-3);
  EXPECT_NEAR(std::log2(a / b), 2.0, 0.3);
}

TEST(Sse, WeakFormWithNoiseIsSmall) {
  const Grid g{1, 64, 8 * kPi};
  const auto spec = NonlinearitySpec::power(1.0, 1.0);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  const auto w0 = packet(g, 4 * kPi + 0.5, 1.5, 0.0);
  TestFunction w{[&](double) { return w0; }, [&](double) { return WaveField(g); }};
  const auto field = make_field(g, 8, 512, 0.5, 8);
  auto res = [&](std::size_t stride) {
    const auto tr = solve_direct(psi0, field, spec, field.time_step() * static_cast<double>(stride), 0.5);
    const auto terms = weak_form_terms(tr, field, spec, w, FracConfig{});
    return terms.residual() / std::abs(terms.noise);
  };
  const double coarse = res(8), fine = res(1);
  EXPECT_LT(fine, 0.02);
  EXPECT_LT(fine, coarse);
  // alpha outside (1 - H, 1/2) is rejected
  FracConfig bad;
  bad.alpha = 0.2;
  const auto tr = solve_direct(psi0, field, spec, field.time_step(), 0.5);
  EXPECT_THROW(weak_form_residual(tr, field, spec, w, bad), ConfigError);
}

TEST(Sse, ClassicalResidualShrinks) {
  const Grid g{1, 64, 8 * kPi};
  const auto spec = NonlinearitySpec::power(1.0, 1.0);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  const auto field = make_field(g, 8, 512, 0.5, 9);
  auto res = [&](std::size_t stride) {
    const auto tr = solve_direct(psi0, field, spec, field.time_step() * static_cast<double>(stride), 0.5);
    return classical_residual(tr, field, spec, FracConfig{}) / norm_l2(tr.back() - psi0);
  };
  const double coarse = res(8), fine = res(1);
  EXPECT_LT(fine, 0.05);
  EXPECT_LT(fine, coarse);
}

TEST(Sse, SolutionHolderExponent) {
  const Grid g{1, 64, 8 * kPi};
  const auto field = make_field(g, 8, 1024, 1.0, 10);
  const auto tr = solve_direct(packet(g, 4 * kPi, 1.0, 1.0), field, NonlinearitySpec::none(), field.time_step(), 1.0);
  const double est = solution_holder(tr, -2.0);
  EXPECT_GT(est, 0.65);
  EXPECT_LT(est, 1.05);
  Trajectory short_tr = tr;
  short_tr.states.resize(100);
  short_tr.times.resize(100);
  EXPECT_THROW(solution_holder(short_tr, -2.0), DomainError);
}
