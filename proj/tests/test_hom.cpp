#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "raman/dynamics.hpp"
#include "raman/ensemble.hpp"
#include "raman/hom.hpp"
#include "raman/rng.hpp"

using namespace raman;

namespace {

Trajectory envelope(std::vector<cplx> alpha, double dt) {
  Trajectory t;
  t.dt = dt;
  t.alpha = std::move(alpha);
  t.efficiency = overlap(t.alpha, t.alpha, dt).real();
  return t;
}

Trajectory random_envelope(Rng& rng, std::size_t n, double dt) {
  std::vector<cplx> a(n);
  for (auto& v : a) v = {rng.normal(), rng.normal()};
  return envelope(std::move(a), dt);
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

TEST(CoherenceAccumulator, SingleTrajectoryIsRankOne) {
  Rng rng(1);
  const Trajectory t = random_envelope(rng, 33, 0.1);
  CoherenceAccumulator acc(33, t.t_end());
  acc.accumulate(t);
  const auto G = acc.G();
  for (std::size_t i = 0; i < 33; ++i)
    for (std::size_t j = 0; j < 33; ++j) {
      const cplx outer = t.alpha[i] * std::conj(t.alpha[j]);
      EXPECT_LE(std::abs(G[i * 33 + j] - outer), 1e-14 * std::abs(outer));
      // every 2x2 minor vanishes
      if (i > 0 && j > 0) {
        const cplx minor = G[i * 33 + j] * G[(i - 1) * 33 + j - 1] - G[i * 33 + j - 1] * G[(i - 1) * 33 + j];
        EXPECT_LT(std::abs(minor), 1e-12 * std::norm(t.alpha[i]) * std::norm(t.alpha[j - 1]) + 1e-14);
      }
    }
}

TEST(CoherenceAccumulator, MergeEqualsSinglePass) {
  // Small-integer envelopes keep every sum exact, so equality is bitwise.
  Rng rng(2);
  std::vector<Trajectory> trajs;
  for (int k = 0; k < 30; ++k) {
    std::vector<cplx> a(17);
    for (auto& v : a) v = {std::floor(8 * rng.uniform()) - 4, std::floor(8 * rng.uniform()) - 4};
    trajs.push_back(envelope(a, 0.25));
  }
  const double T = trajs[0].t_end();
  CoherenceAccumulator all(17, T), a(17, T), b(17, T);
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    all.accumulate(trajs[k], k);
    (k < 13 ? a : b).accumulate(trajs[k], k);
  }
  a.merge(b);
  EXPECT_EQ(a.G(), all.G());
  EXPECT_EQ(a.count(), all.count());
  EXPECT_EQ(a.eta_sum(), all.eta_sum());
  const auto ra = a.estimate_F(), rb = all.estimate_F();
  EXPECT_EQ(ra.F, rb.F);
  EXPECT_EQ(ra.F_stderr, rb.F_stderr);
}

TEST(CoherenceAccumulator, HermitianAfterManyTrajectories) {
  Rng rng(3);
  CoherenceAccumulator acc(64, 6.3);
  for (int k = 0; k < 100; ++k) acc.accumulate(random_envelope(rng, 64, 0.1));
  const auto G = acc.G();
  double scale = 0;
  for (const auto& v : G) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) EXPECT_LE(std::abs(G[i * 64 + j] - std::conj(G[j * 64 + i])), 1e-12 * scale);
}

TEST(CoherenceAccumulator, IdenticalPhotonsGiveUnity) {
  Rng rng(4);
  const Trajectory t = random_envelope(rng, 129, 0.05);
  CoherenceAccumulator acc(129, t.t_end());
  for (int k = 0; k < 40; ++k) acc.accumulate(t);
  EXPECT_NEAR(acc.estimate_F().F, 1.0, 1e-9);
}

TEST(CoherenceAccumulator, OrthogonalInTimeGivesHalf) {
  const std::size_t n = 101;
  std::vector<cplx> early(n), late(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = static_cast<double>(k) / (n - 1);
    if (x < 0.5) early[k] = std::sin(2 * M_PI * x);
    if (x > 0.5) late[k] = cplx(0, std::sin(2 * M_PI * (x - 0.5)));
  }
  CoherenceAccumulator acc(n, 1.0);
  acc.accumulate(envelope(early, 0.01), 0);
  acc.accumulate(envelope(late, 0.01), 1);
  EXPECT_NEAR(acc.estimate_F().F, 0.5, 1e-12);
}

TEST(CoherenceAccumulator, RejectsForeignGrid) {
  Rng rng(5);
  CoherenceAccumulator acc(10, 1.0);
  EXPECT_THROW(acc.accumulate(random_envelope(rng, 12, 0.1)), InvalidArgument);
  EXPECT_THROW(CoherenceAccumulator(1, 1.0), InvalidArgument);
}

TEST(PairwiseOracle, TwoIdenticalTrajectories) {
  Rng rng(6);
  const Trajectory t = random_envelope(rng, 50, 0.1);
  const std::vector<Trajectory> two{t, t};
  EXPECT_NEAR(pairwise_F_oracle(two).F, 1.0, 1e-14);
}

TEST(PairwiseOracle, AllPairsIdentityWithAccumulator) {
  Rng rng(7);
  const std::size_t n = 41;
  std::vector<Trajectory> trajs;
  for (int k = 0; k < 8; ++k) trajs.push_back(random_envelope(rng, n, 0.1));
  CoherenceAccumulator acc(n, trajs[0].t_end());
  for (const auto& t : trajs) acc.accumulate(t);
  const double lhs = pairwise_norm_all(trajs);
  const double rhs = CoherenceAccumulator::norm_integral(acc.G(), n, acc.bin_dt(), 8.0);
  EXPECT_NEAR(lhs, rhs, 1e-12 * lhs);
}

TEST(GramEstimator, MatchesOracleOnOneBatch) {
  Rng rng(8);
  std::vector<Trajectory> trajs;
  for (int k = 0; k < 6; ++k) trajs.push_back(random_envelope(rng, 30, 0.1));
  GramEstimator g;
  g.add_batch(overlap_matrix(trajs), 6, 0);
  EXPECT_NEAR(g.estimate().F, pairwise_F_oracle(trajs).F, 1e-14);
}

TEST(GramEstimator, MergeIsOrderIndependent) {
  Rng rng(9);
  std::vector<std::vector<cplx>> grams;
  for (int b = 0; b < 12; ++b) {
    std::vector<Trajectory> trajs;
    for (int k = 0; k < 4; ++k) trajs.push_back(random_envelope(rng, 20, 0.1));
    grams.push_back(overlap_matrix(trajs));
  }
  GramEstimator all, lo, hi;
  for (std::size_t b = 0; b < grams.size(); ++b) {
    all.add_batch(grams[b], 4, b);
    (b < 20 && b % 20 < 6 ? lo : hi).add_batch(grams[b], 4, b);
  }
  lo.merge(hi);
  // groups hold disjoint batches, so the merged sums are the same sums
  EXPECT_EQ(lo.estimate().F, all.estimate().F);
  EXPECT_EQ(lo.count(), 48u);
}

TEST(Indistinguishability, Fig2PointMatchesClosedFormAndOracle) {
  const SystemParams p = fig2_point();
  const std::vector<NoiseChannel> ch{{1.0, 10.0, Level::r}};
  RunControl ctl;
  ctl.estimator = Estimator::coherence;
  ctl.stop = 0.1;
  const PointResult pr = run_point(p, ch, Mode::three_level, std::nullopt, ctl, 42, 0);
  ASSERT_FALSE(pr.error) << *pr.error;
  const double mc = pr.mc.one_minus_F();
  EXPECT_NEAR(mc / 3.59e-3, 1.0, 0.2) << mc;

  // independent trajectories, recorded on a coarser grid, into the oracle
  Grid g = resolve_grid(p, ch, Model::three_level, 16);
  BatchOptions bo;
  bo.record = true;
  bo.record_stride = 16;
  const BatchSimulator sim(p, ch, Model::three_level, g, bo);
  std::vector<Trajectory> trajs;
  for (std::size_t b = 0; b < 16; ++b) {
    std::vector<std::uint64_t> keys(16);
    for (std::size_t k = 0; k < 16; ++k) keys[k] = stream_key(777, b * 16 + k);
    auto r = sim.run(keys);
    for (auto& t : r.trajectories) {
      t.e.clear(), t.r.clear(), t.g.clear();
      trajs.push_back(std::move(t));
    }
  }
  const auto oracle = pairwise_F_oracle(trajs);
  const double se = std::hypot(oracle.F_stderr, pr.mc.F_stderr);
  EXPECT_LT(std::abs(oracle.F - pr.mc.F), 3.0 * se) << oracle.one_minus_F() << " vs " << mc;
  ASSERT_TRUE(oracle.ratio_bias);
  EXPECT_LT(std::abs(*oracle.ratio_bias), oracle.F_stderr);
}
