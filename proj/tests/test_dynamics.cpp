#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "raman/dynamics.hpp"
#include "raman/rng.hpp"

using namespace raman;

namespace {

SystemParams fig2_point(double delta = 40) {
  SystemParams p;
  p.g0 = 50;
  p.kappa = p.kappa_wg = 1000;
  p.gamma = 1;
  p.omega = 10;
  p.delta = delta;
  return p;
}

double relative_rms(const std::vector<cplx>& a, const std::vector<cplx>& ref) {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < std::min(a.size(), ref.size()); ++k) {
    num += std::norm(a[k] - ref[k]);
    den += std::norm(ref[k]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST(Deterministic, UndrivenSystemStaysInitial) {
  SystemParams p = fig2_point();
  p.omega = 0;
  p.t_max = 5.0;
  const Trajectory t = simulate_deterministic(p);
  for (std::size_t k = 0; k < t.size(); ++k) {
    ASSERT_EQ(t.e[k], cplx(1.0, 0.0));
    ASSERT_EQ(t.alpha[k], cplx(0.0, 0.0));
  }
  EXPECT_EQ(t.efficiency, 0.0);
}

TEST(Deterministic, EfficiencyIsBranchingTimesCaptureWindow) {
  const SystemParams p = fig2_point();
  const Trajectory t = simulate_deterministic(p);
  const double xi = *derive_rates(p).xi;
  EXPECT_NEAR(t.t_end(), 10.0 / xi, 1e-9);
  const double expected = 10.0 / 11.0 * (1.0 - std::exp(-10.0));
  EXPECT_NEAR(t.efficiency, expected, 0.01 * expected);
  EXPECT_NEAR(t.efficiency, 0.909, 0.005);
}

// Modal solution of the noise-free amplitude equations. With slow_only the
// two fast modes (the turn-on transient) are dropped.
static std::vector<cplx> modal_cavity(const SystemParams& p, double dt, std::size_t n, bool slow_only) {
  Eigen::Matrix3cd M;
  M << cplx(0), -0.5 * kI * p.omega, cplx(0),
      -0.5 * kI * p.omega, -(kI * p.delta + 0.5 * p.gamma), -kI * p.g0,
      cplx(0), -kI * p.g0, -(kI * p.delta_c + 0.5 * p.kappa);
  Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(M);
  Eigen::Index slow = 0;
  for (Eigen::Index i = 1; i < 3; ++i)
    if (std::abs(es.eigenvalues()(i).real()) < std::abs(es.eigenvalues()(slow).real())) slow = i;
  const Eigen::Vector3cd c = es.eigenvectors().colPivHouseholderQr().solve(Eigen::Vector3cd(1, 0, 0));
  std::vector<cplx> g(n);
  for (std::size_t k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < 3; ++i)
      if (!slow_only || i == slow)
        g[k] += c(i) * es.eigenvectors()(2, i) * std::exp(es.eigenvalues()(i) * dt * static_cast<double>(k));
  return g;
}

TEST(Deterministic, MatchesModalSolution) {
  for (double delta : {20.0, 40.0, 160.0}) {
    const SystemParams p = fig2_point(delta);
    const Trajectory t = simulate_deterministic(p);
    EXPECT_LT(relative_rms(t.g, modal_cavity(p, t.dt, t.size(), false)), 1e-6) << delta;
  }
}

TEST(Deterministic, SlowModeAfterTurnOnTransient) {
  for (double delta : {40.0, 160.0}) {
    const SystemParams p = fig2_point(delta);
    const Trajectory t = simulate_deterministic(p);
    const auto k0 = static_cast<std::size_t>(10.0 / derive_rates(p).gamma_p / t.dt);
    const auto g = modal_cavity(p, t.dt, t.size(), true);
    const std::vector<cplx> tail_sim(t.g.begin() + k0, t.g.end()), tail_mode(g.begin() + k0, g.end());
    EXPECT_LT(relative_rms(tail_sim, tail_mode), 0.02) << delta;
  }
}

// The closed form is leading order in Omega/Delta. Its phase error over the
// 10/xi horizon goes as 1/Delta, so the residual shrinks 4x from 40 to 160.
TEST(Deterministic, AdiabaticResidualIsLeadingOrder) {
  double rms[2];
  int i = 0;
  for (double delta : {40.0, 160.0}) {
    const SystemParams p = fig2_point(delta);
    const Trajectory t = simulate_deterministic(p);
    rms[i++] = relative_rms(t.g, adiabatic_solution(p, t.dt, t.size()).g);
  }
  EXPECT_NEAR(rms[0] / rms[1], 4.0, 0.4);
  EXPECT_LT(rms[1], 0.05);
}

TEST(Deterministic, BalanceAtFineStep) {
  SystemParams p = fig2_point();
  p.dt = 1e-4;
  EXPECT_LT(simulate_deterministic(p).balance_residual, 1e-6);
}

TEST(Stochastic, ZeroNoiseIsBitwiseDeterministic) {
  const SystemParams p = fig2_point();
  const std::vector<NoiseChannel> quiet{{0.0, 10.0, Level::r}, {0.0, 3.0, Level::e}};
  const Trajectory a = simulate_stochastic(p, quiet, 99);
  const Trajectory b = simulate_deterministic(p);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.dt, b.dt);
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.e, b.e);
  EXPECT_EQ(a.efficiency, b.efficiency);
}

TEST(Stochastic, BalanceAtFineStep) {
  SystemParams p = fig2_point();
  p.dt = 1e-4;
  const std::vector<NoiseChannel> ch{{1.0, 10.0, Level::r}};
  EXPECT_LT(simulate_stochastic(p, ch, 5).balance_residual, 1e-6);
}

TEST(Stochastic, RecordedNoiseIsTheOuPathAtMidpoints) {
  const SystemParams p = fig2_point();
  const std::vector<NoiseChannel> ch{{1.0, 10.0, Level::r}};
  const Trajectory t = simulate_stochastic(p, ch, 17);
  const Grid g = resolve_grid(p, ch, Model::three_level);
  const LevelNoise ln = sample_level_noise(ch, g, 17);
  // one value per node; the final node starts no step
  ASSERT_EQ(t.noise_r.size(), g.steps + 1);
  EXPECT_EQ(std::vector<double>(t.noise_r.begin(), t.noise_r.end() - 1), ln.r);
  EXPECT_EQ(t.noise_r.back(), 0.0);
  // replaying the same realization reproduces the trajectory exactly
  const Trajectory replay = simulate_with_noise(p, Model::three_level, g, ln);
  EXPECT_EQ(replay.alpha, t.alpha);
}

TEST(Stochastic, EnsembleEfficiencyMatchesDeterministic) {
  const SystemParams p = fig2_point();
  const std::vector<NoiseChannel> ch{{1.0, 10.0, Level::r}};
  const Grid g = resolve_grid(p, ch, Model::three_level);
  const BatchSimulator sim(p, ch, Model::three_level, g);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < 63; ++b) {
    std::vector<std::uint64_t> keys(16);
    for (std::size_t k = 0; k < 16; ++k) keys[k] = stream_key(3, b * 16 + k);
    const BatchResult r = sim.run(keys);
    for (double e : r.efficiency) sum += e, ++n;
  }
  ASSERT_GE(n, 1000u);
  const double det = simulate_deterministic(p).efficiency;
  EXPECT_NEAR(sum / static_cast<double>(n), det, 0.01 * det);
}

TEST(Batch, LanesAreIndependentOfBatchComposition) {
  const SystemParams p = fig2_point();
  const std::vector<NoiseChannel> ch{{1.0, 10.0, Level::r}};
  const Grid g = resolve_grid(p, ch, Model::three_level);
  BatchOptions bo;
  bo.record = true;
  const BatchSimulator sim(p, ch, Model::three_level, g, bo);
  const std::uint64_t five[] = {11, 12, 13, 14, 15};
  const std::uint64_t one[] = {14};
  const BatchResult a = sim.run(five);
  const BatchResult b = sim.run(one);
  EXPECT_EQ(a.trajectories[3].alpha, b.trajectories[0].alpha);
  EXPECT_EQ(a.efficiency[3], b.efficiency[0]);
}

TEST(Batch, GramMatchesPairwiseOverlaps) {
  const SystemParams p = fig2_point();
  const std::vector<NoiseChannel> ch{{1.0, 10.0, Level::r}};
  const Grid g = resolve_grid(p, ch, Model::three_level);
  BatchOptions bo;
  bo.record = true;
  const BatchSimulator sim(p, ch, Model::three_level, g, bo);
  const std::uint64_t keys[] = {1, 2, 3, 4, 5, 6};
  const BatchResult r = sim.run(keys);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(r.gram_at(i, i).real(), r.efficiency[i], 1e-12);
    for (std::size_t j = 0; j < 6; ++j) {
      const cplx o = overlap(r.trajectories[i].alpha, r.trajectories[j].alpha, g.dt);
      EXPECT_NEAR(std::abs(r.gram_at(i, j) - o), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(r.gram_at(i, j) - std::conj(r.gram_at(j, i))), 0.0, 1e-14);
    }
  }
}

TEST(Adiabatic, ExcitedStateDecaysAtHalfRamanRate) {
  const SystemParams p = fig2_point();
  const DerivedRates d = derive_rates(p);
  const Trajectory a = adiabatic_solution(p, 0.1, 500);
  // Exact modulus of the complex-detuning form, and xi to leading order in
  // gamma_p / 2 Delta.
  const double rate = p.omega * p.omega * d.gamma_p / (4.0 * std::norm(d.delta_prime));
  const double order = std::pow(d.gamma_p / (2.0 * p.delta), 2);
  EXPECT_NEAR(rate / *d.xi, 1.0, 1.01 * order);
  for (std::size_t k = 1; k < a.size(); k += 37) {
    EXPECT_NEAR(std::abs(a.e[k]), std::exp(-0.5 * rate * a.time(k)), 1e-12);
    EXPECT_NEAR(-2.0 * std::log(std::abs(a.e[k])) / a.time(k), *d.xi, 1.01 * order * *d.xi);
  }
}

TEST(Adiabatic, CavityToExcitedRatio) {
  const Trajectory a = adiabatic_solution(fig2_point(), 0.1, 50);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(std::abs(a.g[k] / a.r[k]), 0.1, 1e-14);
}

TEST(Adiabatic, BeforeTurnOn) {
  const auto amps = adiabatic_amplitudes(fig2_point(), -1.0);
  EXPECT_EQ(amps[0], cplx(1.0, 0.0));
  EXPECT_EQ(amps[1], cplx(0.0, 0.0));
  EXPECT_EQ(amps[2], cplx(0.0, 0.0));
  EXPECT_THROW(adiabatic_amplitudes(fig2_point(0.0), 1.0), InvalidArgument);
}

TEST(TwoLevel, WeakCouplingExponentialDecay) {
  SystemParams p = fig2_point();
  p.g0 = 5;  // gamma_p = 1.1
  const Trajectory t = simulate_two_level(p, {}, 1);
  const double gp = derive_rates(p).gamma_p;
  for (std::size_t k = t.size() / 20; k < t.size(); k += t.size() / 20)
    EXPECT_NEAR(std::norm(t.r[k]) / std::exp(-gp * t.time(k)), 1.0, 0.01) << t.time(k);
}

TEST(TwoLevel, BranchingFractionEfficiency) {
  const Trajectory t = simulate_two_level(fig2_point(), {}, 1);
  EXPECT_NEAR(t.efficiency, 10.0 / 11.0, 1e-3);
  EXPECT_LT(t.balance_residual, 1e-6);
}

TEST(TwoLevel, VacuumRabiRegimeIsNonExponential) {
  SystemParams p = fig2_point();
  p.g0 = 5;
  p.kappa = p.kappa_wg = 10;
  const Trajectory t = simulate_two_level(p, {}, 1);
  // Underdamped exchange with the cavity makes |r|^2 non-monotonic.
  std::size_t rises = 0;
  for (std::size_t k = 1; k < t.size(); ++k) rises += std::norm(t.r[k]) > std::norm(t.r[k - 1]);
  EXPECT_GT(rises, 0u);
  EXPECT_GT(t.efficiency, 0.5);
  EXPECT_LT(t.efficiency, 1.0);
  EXPECT_LT(t.balance_residual, 1e-6);
  // Nothing is left in the system at the horizon.
  EXPECT_LT(std::norm(t.r.back()) + std::norm(t.g.back()), 1e-4);
}

TEST(Balance, RandomStableParameters) {
  Rng rng(2024);
  for (int i = 0; i < 25; ++i) {
    SystemParams p;
    p.kappa = 100.0 * std::pow(10.0, rng.uniform());
    p.kappa_wg = p.kappa * (0.5 + 0.5 * rng.uniform());
    p.g0 = p.kappa * (0.02 + 0.1 * rng.uniform());
    p.gamma = 0.5 + rng.uniform();
    p.omega = 5.0 + 10.0 * rng.uniform();
    p.delta = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (30.0 + 100.0 * rng.uniform());
    const std::vector<NoiseChannel> ch{{0.3 + rng.uniform(), std::pow(10.0, -1.0 + 3.0 * rng.uniform()), Level::r}};
    const Trajectory t = simulate_stochastic(p, ch, stream_key(9, i));
    EXPECT_LT(t.balance_residual, 1e-6) << i;
  }
}

TEST(Grid, AlignmentAndExplicitStep) {
  SystemParams p = fig2_point();
  p.t_max = 3.0;
  p.dt = 0.001;
  const Grid g = resolve_grid(p, {}, Model::three_level, 7);
  EXPECT_EQ(g.steps % 7, 0u);
  EXPECT_NEAR(g.dt * static_cast<double>(g.steps), 3.0, 1e-12);
  EXPECT_LE(g.dt, 0.001 + 1e-15);
  SystemParams r = fig2_point(0.0);
  EXPECT_THROW(resolve_grid(r, {}, Model::three_level), InvalidArgument);
}
