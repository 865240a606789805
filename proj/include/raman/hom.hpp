#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "raman/error.hpp"
#include "raman/trajectory.hpp"

namespace raman {

inline constexpr std::size_t kJackknifeGroups = 20;

struct IndistinguishabilityResult {
  double F = 0.0;
  double F_stderr = 0.0;
  double eta = 0.0;
  double eta_stderr = 0.0;
  std::size_t count = 0;
  std::optional<double> ratio_bias;  // jackknife bias estimate, pairwise oracle only
  std::optional<std::uint64_t> master_seed;
  std::string params_hash;
  bool filtered = false;

  double one_minus_F() const { return 1.0 - F; }
};

inline void to_json(nlohmann::json& j, const IndistinguishabilityResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"F", num(r.F)},     {"F_stderr", num(r.F_stderr)}, {"eta", num(r.eta)},
                     {"eta_stderr", num(r.eta_stderr)}, {"count", r.count}, {"filtered", r.filtered}};
  j["master_seed"] = r.master_seed ? nlohmann::json(*r.master_seed) : nlohmann::json(nullptr);
  j["params_hash"] = r.params_hash;
  if (r.ratio_bias) j["ratio_bias"] = num(*r.ratio_bias);
}

namespace detail {

// Delete-one-group jackknife. `leave_out(g)` returns the estimate with group g
// removed; only groups listed in `active` participate.
template <typename F>
double jackknife_stderr(const std::vector<std::size_t>& active, F&& leave_out) {
  const std::size_t k = active.size();
  if (k < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> est(k);
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    est[i] = leave_out(active[i]);
    mean += est[i];
  }
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double v : est) ss += (v - mean) * (v - mean);
  return std::sqrt(ss * static_cast<double>(k - 1) / static_cast<double>(k));
}

inline double sample_stderr(double sum, double sum_sq, double n) {
  if (n < 2.0) return std::numeric_limits<double>::quiet_NaN();
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n);
}

}  // namespace detail

// Ensemble two-time coherence G(s,t) = sum_i alpha_i(s) conj(alpha_i(t)) on a
// uniform node grid over [0, t_end]. Trajectory i lands in jackknife group
// i mod kJackknifeGroups, so merging partial accumulators built from disjoint
// index sets equals a single pass.
class CoherenceAccumulator {
 public:
  CoherenceAccumulator() = default;
  CoherenceAccumulator(std::size_t n_bins, double t_end) : n_(n_bins), t_end_(t_end) {
    if (n_bins < 2) throw InvalidArgument("CoherenceAccumulator: n_bins must be >= 2");
    if (!(t_end > 0.0)) throw InvalidArgument("CoherenceAccumulator: t_end must be positive");
    groups_.resize(kJackknifeGroups);
  }

  std::size_t n_bins() const { return n_; }
  double t_end() const { return t_end_; }
  double bin_dt() const { return t_end_ / static_cast<double>(n_ - 1); }
  std::size_t count() const {
    std::size_t c = 0;
    for (const auto& g : groups_) c += g.count;
    return c;
  }
  double eta_sum() const {
    double s = 0.0;
    for (const auto& g : groups_) s += g.eta_sum;
    return s;
  }

  // Summed G over all groups, row-major n_bins x n_bins.
  std::vector<cplx> G() const {
    std::vector<cplx> out(n_ * n_);
    for (const auto& g : groups_)
      if (!g.G.empty())
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += g.G[k];
    return out;
  }

  // Adds an envelope already sampled on the bin nodes.
  void accumulate_nodes(std::span<const cplx> alpha, double eta, std::size_t index) {
    if (alpha.size() != n_) throw InvalidArgument("CoherenceAccumulator: bin count mismatch");
    auto& grp = groups_[index % kJackknifeGroups];
    if (grp.G.empty()) grp.G.assign(n_ * n_, cplx{});
    for (std::size_t s = 0; s < n_; ++s) {
      const cplx a = alpha[s];
      cplx* row = grp.G.data() + s * n_;
      for (std::size_t t = 0; t < n_; ++t) row[t] += a * std::conj(alpha[t]);
    }
    grp.eta_sum += eta;
    grp.eta_sq += eta * eta;
    ++grp.count;
  }

  // Samples the trajectory's envelope at the bin nodes; its grid must contain them.
  void accumulate(const Trajectory& traj, std::optional<std::size_t> index = std::nullopt) {
    const std::size_t m = traj.size();
    if (m < 2 || (m - 1) % (n_ - 1) != 0 || std::abs(traj.t_end() - t_end_) > 1e-9 * t_end_)
      throw InvalidArgument("CoherenceAccumulator: trajectory grid does not contain the bin nodes");
    const std::size_t stride = (m - 1) / (n_ - 1);
    std::vector<cplx> nodes(n_);
    for (std::size_t b = 0; b < n_; ++b) nodes[b] = traj.alpha[b * stride];
    accumulate_nodes(nodes, traj.efficiency, index ? *index : count());
  }

  void merge(const CoherenceAccumulator& other) {
    if (other.n_ != n_ || std::abs(other.t_end_ - t_end_) > 1e-12 * t_end_)
      throw InvalidArgument("CoherenceAccumulator: cannot merge accumulators with different bins");
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      const auto& src = other.groups_[k];
      auto& dst = groups_[k];
      if (src.count == 0) continue;
      if (dst.G.empty()) dst.G.assign(n_ * n_, cplx{});
      for (std::size_t i = 0; i < dst.G.size(); ++i) dst.G[i] += src.G[i];
      dst.eta_sum += src.eta_sum;
      dst.eta_sq += src.eta_sq;
      dst.count += src.count;
    }
  }

  // Trapezoid double integral of |G/count|^2.
  static double norm_integral(std::span<const cplx> G, std::size_t n, double h, double count) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double wj = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
        row += wj * std::norm(G[i * n + j]);
      }
      s += wi * row;
    }
    return s * h * h / (count * count);
  }

  static double diag_integral(std::span<const cplx> G, std::size_t n, double h, double count) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += ((i == 0 || i + 1 == n) ? 0.5 : 1.0) * G[i * n + i].real();
    return s * h / count;
  }

  IndistinguishabilityResult estimate_F() const {
    const std::size_t N = count();
    if (N < 2) throw EstimationError("estimate_F needs at least 2 trajectories");
    const std::vector<cplx> total = G();
    const double h = bin_dt();
    auto f_of = [&](std::span<const cplx> g, double c) {
      const double d = diag_integral(g, n_, h, c);
      if (!(d > 0.0)) throw EstimationError("no photon emitted");
      return norm_integral(g, n_, h, c) / (d * d);
    };
    IndistinguishabilityResult res;
    res.count = N;
    res.F = f_of(total, static_cast<double>(N));
    double es = 0.0, eq = 0.0;
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      es += groups_[k].eta_sum;
      eq += groups_[k].eta_sq;
      if (groups_[k].count > 0 && groups_[k].count < N) active.push_back(k);
    }
    res.eta = es / static_cast<double>(N);
    res.eta_stderr = detail::sample_stderr(es, eq, static_cast<double>(N));
    std::vector<cplx> part(total.size());
    res.F_stderr = detail::jackknife_stderr(active, [&](std::size_t k) {
      const auto& grp = groups_[k];
      for (std::size_t i = 0; i < part.size(); ++i) part[i] = total[i] - grp.G[i];
      return f_of(part, static_cast<double>(N - grp.count));
    });
    return res;
  }

 private:
  struct Group {
    std::vector<cplx> G;
    double eta_sum = 0.0;
    double eta_sq = 0.0;
    std::size_t count = 0;
  };
  std::size_t n_ = 0;
  double t_end_ = 0.0;
  std::vector<Group> groups_;
};

// Statistics of independent lockstep batches, each contributing its full
// overlap matrix O_ij = integral alpha_i conj(alpha_j) dt. F is the mean of
// |O_ij|^2 over within-batch pairs i != j divided by the squared mean of O_ii.
// Batches are assigned to jackknife groups by batch index.
class GramEstimator {
 public:
  GramEstimator() : groups_(kJackknifeGroups) {}

  void add_batch(std::span<const cplx> gram, std::size_t lanes, std::size_t batch_index) {
    if (gram.size() != lanes * lanes) throw InvalidArgument("GramEstimator: overlap matrix shape mismatch");
    auto& grp = groups_[batch_index % kJackknifeGroups];
    for (std::size_t i = 0; i < lanes; ++i) {
      const double eta = gram[i * lanes + i].real();
      grp.eta_sum += eta;
      grp.eta_sq += eta * eta;
      for (std::size_t j = 0; j < lanes; ++j)
        if (j != i) grp.offdiag_sq += std::norm(gram[i * lanes + j]);
    }
    grp.pairs += static_cast<double>(lanes) * static_cast<double>(lanes - 1);
    grp.count += lanes;
    ++grp.batches;
  }

  void merge(const GramEstimator& other) {
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      auto& d = groups_[k];
      const auto& s = other.groups_[k];
      d.offdiag_sq += s.offdiag_sq;
      d.pairs += s.pairs;
      d.eta_sum += s.eta_sum;
      d.eta_sq += s.eta_sq;
      d.count += s.count;
      d.batches += s.batches;
    }
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (const auto& g : groups_) c += g.count;
    return c;
  }

  IndistinguishabilityResult estimate() const {
    Group t;
    for (const auto& g : groups_) t = t + g;
    if (t.count < 2 || t.pairs == 0.0) throw EstimationError("estimate_F needs at least one pair of trajectories");
    auto f_of = [](const Group& g) {
      const double eta = g.eta_sum / static_cast<double>(g.count);
      if (!(eta > 0.0)) throw EstimationError("no photon emitted");
      return (g.offdiag_sq / g.pairs) / (eta * eta);
    };
    IndistinguishabilityResult res;
    res.count = t.count;
    res.F = f_of(t);
    res.eta = t.eta_sum / static_cast<double>(t.count);
    res.eta_stderr = detail::sample_stderr(t.eta_sum, t.eta_sq, static_cast<double>(t.count));
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < groups_.size(); ++k)
      if (groups_[k].pairs > 0.0 && groups_[k].count < t.count) active.push_back(k);
    res.F_stderr = detail::jackknife_stderr(active, [&](std::size_t k) { return f_of(t - groups_[k]); });
    return res;
  }

 private:
  struct Group {
    double offdiag_sq = 0.0;
    double pairs = 0.0;
    double eta_sum = 0.0;
    double eta_sq = 0.0;
    std::size_t count = 0;
    std::size_t batches = 0;
    Group operator+(const Group& o) const {
      return {offdiag_sq + o.offdiag_sq, pairs + o.pairs,   eta_sum + o.eta_sum,
              eta_sq + o.eta_sq,         count + o.count,   batches + o.batches};
    }
    Group operator-(const Group& o) const {
      return {offdiag_sq - o.offdiag_sq, pairs - o.pairs,   eta_sum - o.eta_sum,
              eta_sq - o.eta_sq,         count - o.count,   batches - o.batches};
    }
  };
  std::vector<Group> groups_;
};

// All pairwise trapezoid overlaps of a set of envelopes sharing one grid.
inline std::vector<cplx> overlap_matrix(std::span<const Trajectory> trajs) {
  const std::size_t N = trajs.size();
  std::vector<cplx> O(N * N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i; j < N; ++j) {
      if (trajs[j].size() != trajs[i].size() || std::abs(trajs[j].dt - trajs[i].dt) > 1e-12 * trajs[i].dt)
        throw InvalidArgument("pairwise overlap: trajectories do not share a grid");
      O[i * N + j] = overlap(trajs[i].alpha, trajs[j].alpha, trajs[i].dt);
      O[j * N + i] = std::conj(O[i * N + j]);
    }
  return O;
}

// Mean over ordered pairs i != j of |overlap|^2, over the squared mean
// efficiency. Leave-one-out jackknife gives the error and the ratio bias.
inline IndistinguishabilityResult pairwise_F_oracle(std::span<const Trajectory> trajs) {
  const std::size_t N = trajs.size();
  if (N < 2) throw EstimationError("pairwise_F_oracle needs at least 2 trajectories");
  const std::vector<cplx> O = overlap_matrix(trajs);
  double S = 0.0, E = 0.0, E2 = 0.0;
  std::vector<double> row(N, 0.0), eta(N);
  for (std::size_t i = 0; i < N; ++i) {
    eta[i] = O[i * N + i].real();
    E += eta[i];
    E2 += eta[i] * eta[i];
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) row[i] += std::norm(O[i * N + j]);
    S += row[i];
  }
  auto f_of = [](double s, double pairs, double e, double n) {
    const double m = e / n;
    if (!(m > 0.0)) throw EstimationError("no photon emitted");
    return (s / pairs) / (m * m);
  };
  const double n = static_cast<double>(N);
  IndistinguishabilityResult res;
  res.count = N;
  res.F = f_of(S, n * (n - 1.0), E, n);
  res.eta = E / n;
  res.eta_stderr = detail::sample_stderr(E, E2, n);
  if (N >= 3) {
    std::vector<double> loo(N);
    double mean = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      // Removing i drops both its row and its column.
      loo[i] = f_of(S - 2.0 * row[i], (n - 1.0) * (n - 2.0), E - eta[i], n - 1.0);
      mean += loo[i];
    }
    mean /= n;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    res.F_stderr = std::sqrt(ss * (n - 1.0) / n);
    res.ratio_bias = (n - 1.0) * (mean - res.F);
  } else {
    res.F_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

// (1/N^2) sum over all i, j including i == j of |overlap|^2; equals the
// accumulator's double integral of |G/N|^2 when both use the same nodes.
inline double pairwise_norm_all(std::span<const Trajectory> trajs) {
  const std::vector<cplx> O = overlap_matrix(trajs);
  double s = 0.0;
  for (const cplx& v : O) s += std::norm(v);
  const double n = static_cast<double>(trajs.size());
  return s / (n * n);
}

}  // namespace raman
