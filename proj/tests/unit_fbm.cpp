#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fracschrod/fbm.hpp"

using namespace fracschrod;

TEST(FbmCovariance, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(fbm_covariance(1.0, 1.0, 0.75), 1.0);
  EXPECT_DOUBLE_EQ(fbm_covariance(0.0, 0.3, 0.75), 0.0);
  EXPECT_NEAR(fbm_covariance(2.0, 1.0, 0.75), std::sqrt(2.0), 1e-14);
}

TEST(FbmCovariance, RejectsBadArguments) {
  EXPECT_THROW(fbm_covariance(1.0, 1.0, 0.5), DomainError);
  EXPECT_THROW(fbm_covariance(1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(fbm_covariance(-1.0, 1.0, 0.7), DomainError);
}

TEST(FbmCovariance, IncrementVarianceIsPowerLaw) {
  // E(B_t - B_s)^2 = C(t,t) + C(s,s) - 2 C(t,s) = |t-s|^{2H}
  for (double H : {0.6, 0.75, 0.9}) {
    const double t = 0.9, s = 0.35;
    const double v = fbm_covariance(t, t, H) + fbm_covariance(s, s, H) - 2.0 * fbm_covariance(t, s, H);
    EXPECT_NEAR(v, std::pow(t - s, 2.0 * H), 1e-14);
  }
}

TEST(FbmSample, SinglePointGrid) {
  const auto p = sample_fbm(0.75, {0.0}, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.values[0], 0.0);
}

TEST(FbmSample, DeterministicAndSeedSensitive) {
  const auto t = uniform_times(1.0, 64);
  for (auto m : {FbmMethod::cholesky, FbmMethod::circulant}) {
    const auto a = sample_fbm(0.75, t, 42, m);
    const auto b = sample_fbm(0.75, t, 42, m);
    const auto c = sample_fbm(0.75, t, 43, m);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    EXPECT_EQ(a.values[0], 0.0);
  }
}

TEST(FbmSample, CirculantNeedsUniformGrid) {
  EXPECT_THROW(sample_fbm(0.75, {0.0, 0.1, 0.5, 0.6}, 1, FbmMethod::circulant), DomainError);
  EXPECT_THROW(sample_fbm(0.75, {0.0, 0.2, 0.1}, 1), DomainError);
  EXPECT_THROW(sample_fbm(0.75, {0.1, 0.2}, 1), DomainError);
}

TEST(FbmSample, CirculantEmbeddingHasNoNegativeMass) {
  const FbmSampler s(0.75, uniform_times(1.0, 512), FbmMethod::circulant);
  EXPECT_EQ(s.clamped_mass(), 0.0);
}

// Marginal variance t^{2H} for both samplers; increments stationary with variance h^{2H}.
TEST(FbmSample, MarginalAndIncrementVariance) {
  const double H = 0.7;
  const auto t = uniform_times(1.0, 32);
  for (auto m : {FbmMethod::cholesky, FbmMethod::circulant}) {
    const FbmSampler sampler(H, t, m);
    const int paths = 4000;
    std::vector<double> var(t.size(), 0.0), inc_early(1, 0.0), inc_late(1, 0.0);
    for (int r = 0; r < paths; ++r) {
      const auto p = sampler.sample(7, static_cast<std::uint64_t>(r));
      for (std::size_t k = 0; k < t.size(); ++k) var[k] += p.values[k] * p.values[k];
      inc_early[0] += std::pow(p.values[5] - p.values[1], 2);
      inc_late[0] += std::pow(p.values[30] - p.values[26], 2);
    }
    for (std::size_t k : {8u, 16u, 32u}) EXPECT_NEAR(var[k] / paths / std::pow(t[k], 2 * H), 1.0, 0.08);
    const double target = std::pow(4.0 / 32.0, 2 * H);
    EXPECT_NEAR(inc_early[0] / paths / target, 1.0, 0.08);
    EXPECT_NEAR(inc_late[0] / paths / target, 1.0, 0.08);
  }
}

TEST(FbmHolder, LinearPathGivesOne) {
  std::vector<double> v(2048);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) / 2048.0;
  EXPECT_NEAR(estimate_holder(v), 1.0, 1e-12);
}

TEST(FbmHolder, RandomWalkGivesOneHalf) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::vector<double> v(1 << 16, 0.0);
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + n(rng);
  EXPECT_NEAR(estimate_holder(v), 0.5, 0.03);
}

TEST(FbmHolder, DegenerateAndShortPaths) {
  EXPECT_THROW(estimate_holder(std::vector<double>(4096, 0.0)), NumericalError);
  EXPECT_THROW(estimate_holder(std::vector<double>(100, 1.0)), DomainError);
}

TEST(FbmCsv, TwoColumns) {
  const auto p = sample_fbm(0.75, uniform_times(1.0, 4), 1);
  std::ostringstream os;
  write_csv(os, p);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("time,value\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 6);
}
