#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fracschrod/diagnostics.hpp"
#include "fracschrod/fbm.hpp"

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

// keep only mode 0 (the spatially constant one) or zero everything
NoiseField restrict_modes(const NoiseField& f, bool keep_constant) {
  auto paths = f.paths();
  for (std::size_t p = 0; p < paths.size(); ++p)
    if (p > 0 || !keep_constant) std::fill(paths[p].values.begin(), paths[p].values.end(), 0.0);
  return f.with_paths(std::move(paths));
}

}  // namespace

TEST(Charge, FreeEvolutionAndDampedFixture) {
  const Grid g{1, 64, 8 * kPi};
  const auto field = restrict_modes(make_field(g, 4, 64, 0.5, 1), false);
  auto tr = solve_direct(packet(g, 4 * kPi, 1.0, 1.0), field, NonlinearitySpec::none(), 1.0 / 128, 0.5);
  EXPECT_LT(charge_series(tr).max_drift, 1e-14);
  EXPECT_EQ(charge_series(tr).norms.size(), tr.size());
  for (std::size_t j = 0; j < tr.size(); ++j) tr.states[j] *= Complex(std::exp(-0.1 * tr.times[j]));
  EXPECT_NEAR(charge_series(tr).max_drift, 1.0 - std::exp(-0.05), 1e-12);
  Trajectory empty;
  EXPECT_THROW(charge_series(empty), DomainError);
}

TEST(Energy, ZeroNoiseConservesKineticEnergy) {
  const Grid g{1, 128, 8 * kPi};
  const auto field = restrict_modes(make_field(g, 8, 128, 0.5, 2), false);
  const auto tr = solve_direct(packet(g, 4 * kPi, 1.0, 2.0), field, NonlinearitySpec::none(), 1.0 / 256, 0.5);
  const auto e = energy_identity_terms(tr, field, NonlinearitySpec::none());
  EXPECT_EQ(e.stochastic, 0.0);
  EXPECT_LT(e.residual(), 1e-13);
}

TEST(Energy, SpatiallyConstantNoiseIsTheNullTest) {
  const Grid g{1, 128, 8 * kPi};
  const auto field = restrict_modes(make_field(g, 8, 128, 0.5, 3), true);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 2.0);
  const auto tr = solve_direct(psi0, field, NonlinearitySpec::none(), 1.0 / 256, 0.5);
  const auto e = energy_identity_terms(tr, field, NonlinearitySpec::none());
  EXPECT_EQ(e.stochastic, 0.0);
  // same value as the free-evolution residual
  const auto free = solve_direct(psi0, restrict_modes(field, false), NonlinearitySpec::none(), 1.0 / 256, 0.5);
  const double free_res = energy_identity_residual(free, field, NonlinearitySpec::none());
  EXPECT_LT(e.residual(), 1e-13);
  EXPECT_NEAR(e.residual(), free_res, 1e-13);
}

TEST(Energy, GenericNoiseResidualDecreases) {
  const Grid g{1, 128, 8 * kPi};
  const auto field = make_field(g, 16, 1024, 0.5, 4);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 2.0);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t stride : {32, 8, 2}) {
    const auto tr = solve_direct(psi0, field, NonlinearitySpec::none(), field.time_step() * static_cast<double>(stride), 0.5);
    const auto e = energy_identity_terms(tr, field, NonlinearitySpec::none());
    EXPECT_GT(std::abs(e.stochastic), 1e-3);
    EXPECT_LT(e.residual(), prev);
    prev = e.residual();
  }
  EXPECT_LT(prev, 1e-5);
  const auto tr = solve_direct(psi0, field, NonlinearitySpec::power(1.0, 1.0), field.time_step() * 8, 0.5);
  EXPECT_THROW(energy_identity_residual(tr, field, NonlinearitySpec::power(1.0, 1.0)), ConfigError);
}

TEST(Mollification, BelowGridSpacingGivesZeroGaps) {
  const Grid g{1, 64, 8 * kPi};
  const auto field = make_field(g, 8, 128, 0.5, 5);
  const auto rows = mollification_study(packet(g, 4 * kPi, 1.0, 1.0), field, NonlinearitySpec::power(1.0, 1.0),
                                        field.time_step(), 0.5, {field.time_step() / 2});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].noise_gap, 0.0);
  EXPECT_EQ(rows[0].solution_gap, 0.0);
  EXPECT_EQ(rows[0].solution_gap_sup, 0.0);
}

TEST(Mollification, NoiseGapShrinks) {
  const Grid g{1, 64, 8 * kPi};
  const auto field = make_field(g, 8, 512, 0.5, 6);
  const auto rows = mollification_study(packet(g, 4 * kPi, 1.0, 1.0), field, NonlinearitySpec::power(1.0, 1.0),
                                        field.time_step(), 0.5, {1.0 / 8, 1.0 / 32, 1.0 / 128});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].noise_gap, rows[i - 1].noise_gap);
    EXPECT_LT(rows[i].solution_gap_rms, rows[i - 1].solution_gap_rms);
  }
}

TEST(Mollification, ConstantModeClosedForm) {
  // only e_0 moves and g = 0: the noise commutes with the kinetic step, so
  // Psi^eps(t) - Psi(t) = (e^{-i lambda_0 e_0 (beta^eps - beta)(t)} - 1) Psi(t)
  const Grid g{1, 64, 8 * kPi};
  const auto field = restrict_modes(make_field(g, 8, 256, 0.5, 7), true);
  const auto psi0 = packet(g, 4 * kPi, 1.0, 1.0);
  const double eps = 1.0 / 16;
  const auto moll = mollify_field(field, eps);
  const auto a = solve_direct(psi0, field, NonlinearitySpec::none(), field.time_step(), 0.5);
  const auto b = solve_direct(psi0, moll, NonlinearitySpec::none(), field.time_step(), 0.5);
  const double c = field.spectrum().modes[0].amplitude * field.mode_values(0)[0];
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = moll.beta(0, j) - field.beta(0, j);
    const double expected = std::abs(std::polar(1.0, -c * d) - 1.0) * norm_l2(psi0);
    worst = std::max(worst, std::abs(norm_l2(b.states[j] - a.states[j]) - expected));
  }
  EXPECT_LT(worst, 1e-12);
  const auto rows = mollification_study(psi0, field, NonlinearitySpec::none(), field.time_step(), 0.5, {eps});
  EXPECT_LT(rows[0].solution_gap, 1e-12);  // beta^eps(T) = beta(T): T is a knot
}

TEST(Convergence, SyntheticOrders) {
  const std::vector<double> dt{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> e1, e2, e0;
  for (double h : dt) {
    e1.push_back(3 * h);
    e2.push_back(0.5 * h * h);
    e0.push_back(0.2);
  }
  EXPECT_NEAR(convergence_order(dt, e1).order, 1.0, 1e-12);
  EXPECT_FALSE(convergence_order(dt, e1).flagged);
  EXPECT_NEAR(convergence_order(dt, e2).order, 2.0, 1e-12);
  const auto c = convergence_order(dt, e0);
  EXPECT_NEAR(c.order, 0.0, 1e-12);
  EXPECT_TRUE(c.flagged);
  EXPECT_THROW(convergence_order({0.1, 0.05}, {1.0, 0.5}), DomainError);
  EXPECT_THROW(convergence_order(dt, {1.0, 0.0, 1.0, 1.0}), DomainError);
}

TEST(Report, ValidateCatchesBadRows) {
  RunReport r;
  r.rows.push_back({0.0, 1.0, 1.0, {}});
  r.rows.push_back({0.1, 1.0, 1.0, {{"duhamel", 1e-3}}});
  EXPECT_NO_THROW(r.validate());
  r.rows.push_back({0.05, 1.0, 1.0, {}});
  EXPECT_THROW(r.validate(), DomainError);
  r.rows.pop_back();
  r.rows.back().residuals["duhamel"] = std::nan("");
  EXPECT_THROW(r.validate(), NumericalError);
  r.rows.back().residuals.clear();
  r.tables.push_back({"t", {"a", "b"}, {{1.0}}, {}, {}, {}});
  EXPECT_THROW(r.validate(), DomainError);
}
