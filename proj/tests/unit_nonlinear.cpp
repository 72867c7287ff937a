#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracschrod/nonlinear.hpp"

using namespace fracschrod;

namespace {

constexpr double kPi = std::numbers::pi;

WaveField packet(const Grid& g, double x0, double width, double kx) {
  return sample_wave(g, [&](const std::array<double, 3>& x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim; ++d) r2 += (x[static_cast<std::size_t>(d)] - x0) * (x[static_cast<std::size_t>(d)] - x0);
    return std::exp(-r2 / (2 * width * width)) * std::polar(1.0, kx * x[0]);
  });
}

}  // namespace

TEST(Nonlinearity, ParseAndValidate) {
  EXPECT_EQ(parse_nonlinearity("power"), NonlinearityKind::power);
  EXPECT_THROW(parse_nonlinearity("cubic"), ConfigError);
  EXPECT_THROW(NonlinearitySpec::power(-0.5, 1.0).validate(1, 0), ConfigError);
  EXPECT_THROW(NonlinearitySpec::power(0.25, 1.0).validate(2, 2), ConfigError);
  EXPECT_NO_THROW(NonlinearitySpec::power(0.25, 1.0).validate(1, 2));
  EXPECT_NO_THROW(NonlinearitySpec::power(0.5, 1.0).validate(3, 2));
  EXPECT_THROW(NonlinearitySpec::hartree().validate(2, 0), ConfigError);
  EXPECT_NO_THROW(NonlinearitySpec::hartree().validate(3, 0));
}

TEST(Nonlinearity, PowerPointwise) {
  const Grid g{1, 32, 2 * kPi};
  const auto psi = packet(g, kPi, 0.7, 2.0);
  const auto spec = NonlinearitySpec::power(1.5, -2.0);
  const auto out = apply_g(psi, spec);
  for (std::size_t i = 0; i < g.size(); ++i)
    EXPECT_NEAR(std::abs(out[i] - (-2.0) * std::pow(std::abs(psi[i]), 3.0) * psi[i]), 0.0, 1e-14);
  // sigma = 0 is linear
  const auto lin = apply_g(psi, NonlinearitySpec::power(0.0, 3.0));
  EXPECT_LT(norm_l2(lin - Complex(3.0) * psi), 1e-14);
}

TEST(Nonlinearity, GaugeInvarianceAndChargeSymmetry) {
  const Grid g{2, 16, 2 * kPi};
  const auto psi = packet(g, 3.0, 0.9, 1.0);
  RealGrid theta(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) theta[i] = std::sin(g.coordinate(i, 0)) + 0.3 * g.coordinate(i, 1);
  for (const auto& spec : {NonlinearitySpec::power(1.0, 1.0), NonlinearitySpec::power(0.7, -1.0)}) {
    EXPECT_LT(gauge_invariance_defect(psi, theta, spec), 1e-13);
    EXPECT_LT(charge_symmetry_defect(psi, spec), 1e-14);
  }
  const Grid g3{3, 8, 2 * kPi};
  const auto psi3 = packet(g3, 3.0, 1.0, 1.0);
  RealGrid theta3(g3.size());
  for (std::size_t i = 0; i < g3.size(); ++i) theta3[i] = std::cos(g3.coordinate(i, 2));
  EXPECT_LT(gauge_invariance_defect(psi3, theta3, NonlinearitySpec::hartree()), 1e-12);
  EXPECT_LT(charge_symmetry_defect(psi3, NonlinearitySpec::hartree()), 1e-14);
}

TEST(Nonlinearity, HartreeSolvesPoisson) {
  // density 1 + cos(x): V solves -Lap V = 4 pi (rho - mean) so V = 4 pi cos(x)
  const Grid g{3, 8, 2 * kPi};
  const auto psi = sample_wave(g, [](const std::array<double, 3>& x) { return std::sqrt(1.0 + std::cos(x[0])); });
  const auto V = hartree_potential(psi);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(V[i], 4 * kPi * std::cos(g.coordinate(i, 0)), 1e-12);
  const Grid g1{1, 8, 2 * kPi};
  EXPECT_THROW(hartree_potential(WaveField(g1)), ConfigError);
}

TEST(Nonlinearity, PhaseFlowIsExact) {
  const Grid g{1, 64, 2 * kPi};
  const auto spec = NonlinearitySpec::power(1.0, 2.0);
  auto psi = packet(g, kPi, 0.5, 0.0);
  const auto psi0 = psi;
  nonlinear_phase_flow(psi, spec, 0.3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(std::abs(psi[i]), std::abs(psi0[i]), 1e-14);
    EXPECT_LT(std::abs(psi[i] - std::polar(1.0, -0.3 * 2.0 * std::norm(psi0[i])) * psi0[i]), 1e-14);
  }
  // two half flows compose to one
  auto half = psi0;
  nonlinear_phase_flow(half, spec, 0.15);
  nonlinear_phase_flow(half, spec, 0.15);
  EXPECT_LT(norm_l2(half - psi), 1e-13);
}

TEST(Nonlinearity, LipschitzProbeOnLinearCaseEqualsCoupling) {
  const Grid g{1, 64, 2 * kPi};
  const auto a = packet(g, 2.0, 0.6, 1.0), b = packet(g, 4.0, 0.8, -1.0);
  EXPECT_NEAR(lipschitz_probe(a, b, NonlinearitySpec::power(0.0, 2.5), 1.0), 2.5, 1e-12);
  EXPECT_THROW(lipschitz_probe(a, a, NonlinearitySpec::power(1.0, 1.0), 0.0), DomainError);
}

TEST(Nonlinearity, HartreeLipschitzScalesQuadratically) {
  // g is cubic: ratio for (s a, s b) grows like s^2, the envelope too
  const Grid g{3, 8, 2 * kPi};
  const auto a = packet(g, 3.0, 0.9, 1.0), b = packet(g, 3.3, 1.1, 0.0);
  const auto spec = NonlinearitySpec::hartree();
  const double r1 = lipschitz_probe(a, b, spec, 1.0);
  const double r2 = lipschitz_probe(Complex(2.0) * a, Complex(2.0) * b, spec, 1.0);
  EXPECT_NEAR(r2 / r1, 4.0, 1e-10);
  EXPECT_NEAR(hartree_envelope(Complex(2.0) * a, Complex(2.0) * b, 1.0) / hartree_envelope(a, b, 1.0), 4.0, 1e-12);
}

TEST(Nonlinearity, GrowthRatioOfPower) {
  const Grid g{1, 64, 2 * kPi};
  const auto psi = Complex(0.5) * packet(g, kPi, 0.8, 0.0);
  const double small = growth_ratio(psi, NonlinearitySpec::power(1.0, 1.0), 0.0);
  const double big = growth_ratio(Complex(2.0) * psi, NonlinearitySpec::power(1.0, 1.0), 0.0);
  EXPECT_NEAR(big / small, 4.0, 1e-12);
}
