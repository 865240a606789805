#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "raman/dynamics.hpp"
#include "raman/ensemble.hpp"
#include "raman/filter.hpp"

using namespace raman;

namespace {

Trajectory tone(double omega, double dt, std::size_t n) {
  Trajectory t;
  t.dt = dt;
  for (std::size_t k = 0; k < n; ++k) t.alpha.push_back(std::exp(cplx(0.0, -omega * dt * static_cast<double>(k))));
  return t;
}

SystemParams fig2_point() {
  SystemParams p;
  p.g0 = 50;
  p.kappa = p.kappa_wg = 1000;
  p.gamma = 1;
  p.omega = 10;
  p.delta = 40;
  return p;
}

}  // namespace

TEST(FilterTransmission, CenterHalfMaximumAndWing) {
  const FilterSpec f{3.0, 2.0};
  EXPECT_NEAR(std::abs(filter_transmission(f, 3.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::norm(filter_transmission(f, 4.0)), 0.5, 1e-15);
  EXPECT_NEAR(std::norm(filter_transmission(f, 2.0)), 0.5, 1e-15);
  EXPECT_NEAR(std::norm(filter_transmission(f, 3.0 + 20.0)), 1.0 / 401.0, 1e-15);
  EXPECT_NEAR(1.0 / 401.0, 2.5e-3, 1e-5);
}

TEST(FilterTransmission, RejectsNonPositiveWidth) {
  EXPECT_THROW((FilterSpec{0.0, 0.0}.validate()), InvalidArgument);
  EXPECT_THROW(OnePoleFilter(FilterSpec{0.0, -1.0}, 0.1), InvalidArgument);
}

TEST(ApplyFilter, ContinuousWaveAtCenterPassesUnchanged) {
  const FilterSpec f{-0.625, 3.4375};
  const double dt = 1e-3;
  const Trajectory in = tone(f.center, dt, 20000);  // 68 filter times
  const Trajectory out = apply_filter(in, f);
  const std::size_t k = in.size() - 1;
  EXPECT_NEAR(std::abs(out.alpha[k] / in.alpha[k] - 1.0), 0.0, 1e-6);
}

TEST(ApplyFilter, ContinuousWaveAtHalfWidthHalvesPower) {
  const FilterSpec f{0.0, 2.0};
  const double dt = 1e-3;
  const Trajectory in = tone(1.0, dt, 30000);
  const Trajectory out = apply_filter(in, f);
  const std::size_t k = in.size() - 1;
  const cplx gain = out.alpha[k] / in.alpha[k];
  EXPECT_NEAR(std::norm(gain), 0.5, 1e-6);
  EXPECT_NEAR(std::abs(gain - filter_transmission(f, 1.0)), 0.0, 1e-6);
}

TEST(ApplyFilter, KeepsRingDown) {
  const FilterSpec f{0.0, 1.0};
  const Trajectory out = apply_filter(tone(0.0, 0.01, 100), f);
  EXPECT_GE(out.size(), 100u + 1000u);
  EXPECT_TRUE(out.filtered);
  // 10/Gamma of free decay leaves e^-10 of the power
  const double peak = std::norm(out.alpha[99]);
  EXPECT_NEAR(std::norm(out.alpha.back()) / peak, std::exp(-10.0), 2e-6);
}

TEST(ApplyFilter, RamanPhotonLossWithTwentyXiFilter) {
  const SystemParams p = fig2_point();
  const Trajectory t = simulate_deterministic(p);
  const FilterSpec f = FilterChoice{}.resolve(p);
  EXPECT_NEAR(f.center, -0.625, 1e-15);
  EXPECT_NEAR(f.fwhm, 20 * 0.171875, 1e-12);
  const Trajectory ft = apply_filter(t, f);
  const double loss = 1.0 - ft.efficiency / t.efficiency;
  EXPECT_NEAR(loss, 0.05, 0.02);
  EXPECT_NEAR(t.efficiency, 0.90, 0.02);
  EXPECT_NEAR(ft.efficiency, 0.85, 0.02);
}

TEST(ApplyFilter, BatchFilterMatchesPostProcessing) {
  const SystemParams p = fig2_point();
  const std::vector<NoiseChannel> ch{{1.0, 10.0, Level::r}};
  const Grid g = resolve_grid(p, ch, Model::three_level);
  BatchOptions bo;
  bo.record = true;
  bo.filter = FilterChoice{}.resolve(p);
  const BatchSimulator sim(p, ch, Model::three_level, g, bo);
  const std::uint64_t keys[] = {5, 6, 7};
  const BatchResult r = sim.run(keys);
  for (std::size_t k = 0; k < 3; ++k) {
    const Trajectory ft = apply_filter(r.trajectories[k], *bo.filter);
    // the batch stops at t_max; the post-processed copy adds the ring-down
    EXPECT_NEAR(r.efficiency_filtered[k], ft.efficiency, 1e-6);
    EXPECT_NEAR(std::abs(r.gram_filtered_at(k, k)), r.efficiency_filtered[k], 1e-12);
  }
}
