#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "raman/noise.hpp"
#include "raman/rng.hpp"

using namespace raman;

namespace {

std::vector<NoisePath> ou_paths(const NoiseChannel& c, double dt, std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<NoisePath> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_ou_path(c, 0.0, dt, n, stream_key(seed, i)));
  return out;
}

std::vector<NoisePath> trap_paths(const TrapEnsemble& te, double dt, std::size_t n, std::size_t count,
                                  std::uint64_t seed) {
  std::vector<NoisePath> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_trap_path(te, 0.0, dt, n, stream_key(seed, i)));
  return out;
}

const TrapEnsemble kSingleTrap{{Trap{2.0, 1.0, 1.0}}};

}  // namespace

TEST(OuPath, ZeroAmplitudeIsIdenticallyZero) {
  const NoisePath p = sample_ou_path({0.0, 10.0, Level::r}, 0.0, 0.01, 500, 7);
  ASSERT_EQ(p.size(), 500u);
  for (double v : p.values) EXPECT_EQ(v, 0.0);
}

TEST(OuPath, ExactDiscretizationCoefficients) {
  const OuStepper s({1.0, 10.0, Level::r}, 0.01);
  EXPECT_NEAR(s.decay(), std::exp(-0.1), 1e-15);
  EXPECT_NEAR(s.decay(), 0.9048, 5e-5);
  EXPECT_NEAR(s.innovation_std(), std::sqrt(1.0 - std::exp(-0.2)), 1e-15);
  EXPECT_NEAR(s.innovation_std(), 0.4258, 5e-5);
}

TEST(OuPath, SameSeedSamePath) {
  const NoiseChannel c{1.0, 10.0, Level::r};
  EXPECT_EQ(sample_ou_path(c, 0.0, 0.01, 100, 3).values, sample_ou_path(c, 0.0, 0.01, 100, 3).values);
  EXPECT_NE(sample_ou_path(c, 0.0, 0.01, 100, 3).values, sample_ou_path(c, 0.0, 0.01, 100, 4).values);
}

TEST(OuPath, StationaryVarianceOverManyPaths) {
  const auto paths = ou_paths({1.0, 10.0, Level::r}, 0.01, 41, 10000, 11);
  const std::size_t lag0[] = {0};
  const auto est = estimate_autocovariance(paths, lag0);
  EXPECT_LT(std::abs(est.mean[0] - 1.0), 3.0 * est.stderr_[0]) << est.mean[0] << " +- " << est.stderr_[0];
}

TEST(OuPath, AutocovarianceAtOneCorrelationTime) {
  const auto paths = ou_paths({1.0, 10.0, Level::r}, 0.01, 41, 10000, 12);
  const std::size_t lags[] = {10};
  const auto est = estimate_autocovariance(paths, lags);
  EXPECT_NEAR(est.lags[0], 0.1, 1e-12);
  EXPECT_LT(std::abs(est.mean[0] - std::exp(-1.0)), 3.0 * est.stderr_[0]) << est.mean[0] << " +- " << est.stderr_[0];
}

TEST(TrapEnsemble, SingleTrapMoments) {
  EXPECT_DOUBLE_EQ(kSingleTrap.variance(), 1.0);
  EXPECT_DOUBLE_EQ(kSingleTrap.rate(), 2.0);
  EXPECT_DOUBLE_EQ(kSingleTrap.mean(), 1.0);
}

TEST(TrapPath, ZeroMean) {
  const auto paths = trap_paths(kSingleTrap, 0.05, 40, 10000, 21);
  // Per-path time averages are independent across paths.
  double s = 0, s2 = 0;
  for (const auto& p : paths) {
    double m = 0;
    for (double v : p.values) m += v;
    m /= static_cast<double>(p.size());
    s += m;
    s2 += m * m;
  }
  const double n = static_cast<double>(paths.size());
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  EXPECT_LT(std::abs(mean), 3.0 * se) << mean << " +- " << se;
}

TEST(TrapPath, AutocovarianceMatchesExponential) {
  const auto paths = trap_paths(kSingleTrap, 0.05, 31, 10000, 22);
  const std::size_t lags[] = {0, 10};  // 0 and 1/beta
  const auto est = estimate_autocovariance(paths, lags);
  // x^2 = c^2/4 = 1 on every sample, so lag 0 is exact with zero spread
  EXPECT_LE(std::abs(est.mean[0] - 1.0), 3.0 * est.stderr_[0] + 1e-12) << est.mean[0];
  EXPECT_LT(std::abs(est.mean[1] - std::exp(-1.0)), 3.0 * est.stderr_[1]) << est.mean[1];
}

TEST(TrapPath, RejectsNonPositiveRates) {
  const TrapEnsemble bad{{Trap{1.0, 0.0, 1.0}}};
  EXPECT_THROW(sample_trap_path(bad, 0.0, 0.1, 10, 1), InvalidArgument);
}

TEST(Autocovariance, ConstantPaths) {
  std::vector<NoisePath> paths(50, NoisePath{0.0, 0.1, std::vector<double>(20, 1.5)});
  const std::size_t lags[] = {0, 3, 10};
  const auto raw = estimate_autocovariance(paths, lags, false);
  const auto centred = estimate_autocovariance(paths, lags, true);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(raw.mean[k], 2.25, 1e-12);
    EXPECT_NEAR(centred.mean[k], 0.0, 1e-12);
  }
}

TEST(Autocovariance, RejectsLagBeyondSpan) {
  std::vector<NoisePath> paths(2, NoisePath{0.0, 0.1, std::vector<double>(5, 0.0)});
  const std::size_t lags[] = {5};
  EXPECT_THROW(estimate_autocovariance(paths, lags), InvalidArgument);
}

TEST(NoiseChannel, CorrelationAndValidation) {
  const NoiseChannel c{2.0, 4.0, Level::r};
  EXPECT_DOUBLE_EQ(c.correlation(0.0), 4.0);
  EXPECT_DOUBLE_EQ(c.correlation(-0.25), 4.0 * std::exp(-1.0));
  EXPECT_DOUBLE_EQ(c.integrated_correlation(), 2.0);
  EXPECT_THROW((NoiseChannel{1.0, 0.0, Level::r}.validate()), InvalidArgument);
  EXPECT_THROW((NoiseChannel{-1.0, 1.0, Level::r}.validate()), InvalidArgument);
  EXPECT_THROW(level_from_string("x"), InvalidArgument);
}

TEST(Rng, NormalMoments) {
  Rng rng(5);
  double s = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}
