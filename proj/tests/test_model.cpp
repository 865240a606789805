#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "raman/model.hpp"

using namespace raman;

namespace {

SystemParams bad_cavity(double delta) {
  SystemParams p;
  p.g0 = 50;
  p.kappa = p.kappa_wg = 1000;
  p.gamma = 1;
  p.omega = 10;
  p.delta = delta;
  return p;
}

}  // namespace

TEST(DeriveRates, PurcellEnhancedWidth) {
  EXPECT_DOUBLE_EQ(derive_rates(bad_cavity(40)).gamma_p, 11.0);
}

TEST(DeriveRates, RamanRateAndShift) {
  const DerivedRates d = derive_rates(bad_cavity(40));
  ASSERT_TRUE(d.xi && d.zeta);
  EXPECT_NEAR(*d.xi, 0.171875, 1e-15);
  EXPECT_NEAR(*d.zeta, -0.625, 1e-15);
  EXPECT_DOUBLE_EQ(d.delta_prime.real(), 40.0);
  EXPECT_DOUBLE_EQ(d.delta_prime.imag(), -5.5);
}

TEST(DeriveRates, DecoupledCavity) {
  SystemParams p = bad_cavity(40);
  p.g0 = 0;
  const DerivedRates d = derive_rates(p);
  EXPECT_DOUBLE_EQ(d.gamma_p, 1.0);
  EXPECT_DOUBLE_EQ(d.branching, 0.0);
}

TEST(DeriveRates, DetunedCavityEffectiveWidth) {
  SystemParams p = bad_cavity(40);
  p.g0 = 5;
  p.kappa = p.kappa_wg = 10;
  const DerivedRates d = derive_rates(p);
  EXPECT_DOUBLE_EQ(d.gamma_p, 11.0);
  // (100 * 11 + 6400 * 1) / (100 + 6400)
  EXPECT_NEAR(d.gamma_eff, 7500.0 / 6500.0, 1e-14);
}

TEST(DeriveRates, BranchingFraction) {
  EXPECT_NEAR(derive_rates(bad_cavity(40)).branching, 10.0 / 11.0, 1e-15);
  SystemParams p = bad_cavity(40);
  p.kappa_wg = 500;
  EXPECT_NEAR(derive_rates(p).branching, 5.0 / 11.0, 1e-15);
}

TEST(DeriveRates, ResonanceLeavesRamanRatesUnset) {
  const DerivedRates d = derive_rates(bad_cavity(0));
  EXPECT_FALSE(d.xi);
  EXPECT_FALSE(d.zeta);
}

TEST(RegimeCheck, BadCavityPointPasses) {
  const RegimeReport r = regime_check(bad_cavity(40));
  for (const auto& c : r.conditions) {
    EXPECT_LT(c.ratio, 0.2) << c.name;
    EXPECT_TRUE(c.pass) << c.name;
  }
  EXPECT_TRUE(r.all_pass());
}

TEST(RegimeCheck, ResonantDriveFailsFirstCondition) {
  const RegimeReport r = regime_check(bad_cavity(0));
  EXPECT_TRUE(std::isinf(r.conditions[0].ratio));
  EXPECT_FALSE(r.conditions[0].pass);
  EXPECT_FALSE(r.all_pass());
}

TEST(RegimeCheck, ZeroDriveTriviallySatisfiesDriveConditions) {
  SystemParams p = bad_cavity(40);
  p.omega = 0;
  const RegimeReport r = regime_check(p);
  for (int i = 1; i < 4; ++i) EXPECT_EQ(r.conditions[i].ratio, 0.0);
}

TEST(SystemParamsValidation, RejectsBadRates) {
  SystemParams p = bad_cavity(40);
  p.kappa = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = bad_cavity(40);
  p.kappa_wg = 2000;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = bad_cavity(40);
  p.gamma = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_NO_THROW(bad_cavity(40).validate());
}

TEST(SystemParamsJson, RoundTripAndUnknownField) {
  SystemParams p = bad_cavity(40);
  p.t_max = 12.5;
  const nlohmann::json j = p;
  EXPECT_EQ(j.get<SystemParams>(), p);
  nlohmann::json bad = j;
  bad["detuning"] = 3;
  EXPECT_THROW(bad.get<SystemParams>(), InvalidArgument);
}
