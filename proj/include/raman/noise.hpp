#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "raman/error.hpp"
#include "raman/rng.hpp"

namespace raman {

enum class Level { e, r, g };

inline const char* to_string(Level l) {
  switch (l) {
    case Level::e: return "e";
    case Level::r: return "r";
    case Level::g: return "g";
  }
  return "?";
}

inline Level level_from_string(const std::string& s) {
  if (s == "e") return Level::e;
  if (s == "r") return Level::r;
  if (s == "g") return Level::g;
  throw InvalidArgument("unknown noise target '" + s + "' (expected e, r or g)");
}

// One stationary energy-shift process with correlation sigma^2 exp(-beta|tau|).
struct NoiseChannel {
  double sigma = 0.0;
  double beta = 1.0;
  Level target = Level::r;

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("NoiseChannel: sigma must be >= 0");
    if (sigma > 0.0 && !(beta > 0.0 && std::isfinite(beta)))
      throw InvalidArgument("NoiseChannel: beta must be > 0 when sigma > 0");
  }

  double correlation(double tau) const { return sigma * sigma * std::exp(-beta * std::abs(tau)); }

  // Integral of the correlation over all lags; this is 2/T2 in the white limit.
  double integrated_correlation() const { return 2.0 * sigma * sigma / beta; }
};

inline void to_json(nlohmann::json& j, const NoiseChannel& c) {
  j = nlohmann::json{{"sigma", c.sigma}, {"beta", c.beta}, {"target", to_string(c.target)}};
}

inline void from_json(const nlohmann::json& j, NoiseChannel& c) {
  for (const auto& [key, _] : j.items())
    if (key != "sigma" && key != "beta" && key != "target")
      throw InvalidArgument("NoiseChannel JSON: unknown field '" + key + "'");
  NoiseChannel out;
  out.sigma = j.value("sigma", 0.0);
  out.beta = j.value("beta", 1.0);
  out.target = level_from_string(j.value("target", std::string("r")));
  out.validate();
  c = out;
}

struct Trap {
  double coupling = 0.0;  // energy shift when charged
  double rate_01 = 1.0;   // 0 -> 1
  double rate_10 = 1.0;   // 1 -> 0
};

struct TrapEnsemble {
  std::vector<Trap> traps;

  void validate() const {
    for (const auto& t : traps)
      if (!(t.rate_01 > 0.0 && t.rate_10 > 0.0)) throw InvalidArgument("TrapEnsemble: rates must be > 0");
  }

  double variance() const {
    double v = 0.0;
    for (const auto& t : traps) {
      const double s = t.rate_01 + t.rate_10;
      v += t.coupling * t.coupling * t.rate_10 * t.rate_01 / (s * s);
    }
    return v;
  }

  // Fluctuation rate; only single-valued when all traps share r01 + r10.
  double rate() const { return traps.empty() ? 0.0 : traps.front().rate_01 + traps.front().rate_10; }

  double mean() const {
    double m = 0.0;
    for (const auto& t : traps) m += t.coupling * t.rate_01 / (t.rate_01 + t.rate_10);
    return m;
  }
};

// Uniform samples x(t0 + k*dt).
struct NoisePath {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;

  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  std::size_t size() const { return values.size(); }

  void write_csv(std::ostream& os) const {
    os << "t,value\n";
    os.precision(17);
    for (std::size_t k = 0; k < values.size(); ++k) os << time(k) << ',' << values[k] << '\n';
  }
};

// Exact discretization of the Ornstein-Uhlenbeck process at a fixed step.
class OuStepper {
 public:
  OuStepper() = default;
  OuStepper(const NoiseChannel& c, double dt)
      : sigma_(c.sigma), a_(c.sigma > 0.0 ? std::exp(-c.beta * dt) : 0.0), innov_(c.sigma * std::sqrt(1.0 - a_ * a_)) {}

  double decay() const { return a_; }
  double innovation_std() const { return innov_; }

  double start(Rng& rng) const { return sigma_ > 0.0 ? sigma_ * rng.normal() : 0.0; }
  // Explicit fma pins the rounding, so every call site (whole path, lane
  // block) yields the same bits whatever the compiler contracts.
  double step(double x, Rng& rng) const { return sigma_ > 0.0 ? std::fma(a_, x, innov_ * rng.normal()) : 0.0; }

 private:
  double sigma_ = 0.0;
  double a_ = 0.0;
  double innov_ = 0.0;
};

inline NoisePath sample_ou_path(const NoiseChannel& channel, double t0, double dt, std::size_t n, std::uint64_t seed) {
  channel.validate();
  if (!(dt > 0.0)) throw InvalidArgument("sample_ou_path: dt must be > 0");
  NoisePath path{t0, dt, std::vector<double>(n, 0.0)};
  if (channel.sigma == 0.0 || n == 0) return path;
  Rng rng(seed);
  const OuStepper ou(channel, dt);
  double x = ou.start(rng);
  path.values[0] = x;
  for (std::size_t k = 1; k < n; ++k) {
    x = ou.step(x, rng);
    path.values[k] = x;
  }
  return path;
}

// Sum of independent two-state telegraph processes, each started from its
// stationary law, sampled on the grid, with the stationary mean removed.
inline NoisePath sample_trap_path(const TrapEnsemble& ensemble, double t0, double dt, std::size_t n, std::uint64_t seed) {
  ensemble.validate();
  if (!(dt > 0.0)) throw InvalidArgument("sample_trap_path: dt must be > 0");
  NoisePath path{t0, dt, std::vector<double>(n, 0.0)};
  if (ensemble.traps.empty() || n == 0) return path;
  Rng rng(seed);
  for (const auto& trap : ensemble.traps) {
    const double p1 = trap.rate_01 / (trap.rate_01 + trap.rate_10);
    int state = rng.uniform() < p1 ? 1 : 0;
    double t = t0;
    double next_jump = t0 + rng.exponential(state ? trap.rate_10 : trap.rate_01);
    for (std::size_t k = 0; k < n; ++k) {
      const double tk = t0 + static_cast<double>(k) * dt;
      while (next_jump <= tk) {
        state ^= 1;
        t = next_jump;
        next_jump = t + rng.exponential(state ? trap.rate_10 : trap.rate_01);
      }
      if (state) path.values[k] += trap.coupling;
    }
  }
  const double m = ensemble.mean();
  for (auto& v : path.values) v -= m;
  return path;
}

struct AutocovarianceEstimate {
  std::vector<double> lags;  // in time units
  std::vector<double> mean;
  std::vector<double> stderr_;
};

// Ensemble- and time-averaged <x(t) x(t+tau)> with a grouped jackknife over
// paths. With remove_mean the grand mean of all samples is subtracted first.
inline AutocovarianceEstimate estimate_autocovariance(std::span<const NoisePath> paths, std::span<const std::size_t> lag_steps,
                                                      bool remove_mean = false, std::size_t groups = 20) {
  if (paths.empty()) throw InvalidArgument("estimate_autocovariance: no paths");
  const std::size_t n = paths.front().size();
  for (const auto& p : paths)
    if (p.size() != n || p.dt != paths.front().dt) throw InvalidArgument("estimate_autocovariance: paths must share a grid");
  for (std::size_t lag : lag_steps)
    if (lag >= n) throw InvalidArgument("estimate_autocovariance: lag exceeds grid span");

  double grand_mean = 0.0;
  if (remove_mean) {
    for (const auto& p : paths)
      for (double v : p.values) grand_mean += v;
    grand_mean /= static_cast<double>(paths.size() * n);
  }
  const std::size_t np = paths.size();
  groups = std::max<std::size_t>(2, std::min(groups, np));

  AutocovarianceEstimate out;
  for (std::size_t lag : lag_steps) {
    // Per-group sums of lagged products; each path contributes n - lag products.
    std::vector<double> group_sum(groups, 0.0);
    std::vector<double> group_count(groups, 0.0);
    for (std::size_t i = 0; i < np; ++i) {
      const auto& v = paths[i].values;
      double s = 0.0;
      for (std::size_t k = 0; k + lag < n; ++k) s += (v[k] - grand_mean) * (v[k + lag] - grand_mean);
      const std::size_t gi = i * groups / np;
      group_sum[gi] += s;
      group_count[gi] += static_cast<double>(n - lag);
    }
    double total = 0.0, count = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      total += group_sum[g];
      count += group_count[g];
    }
    const double est = total / count;
    double var = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      const double loo = (total - group_sum[g]) / (count - group_count[g]);
      var += (loo - est) * (loo - est);
    }
    var *= static_cast<double>(groups - 1) / static_cast<double>(groups);
    out.lags.push_back(static_cast<double>(lag) * paths.front().dt);
    out.mean.push_back(est);
    out.stderr_.push_back(std::sqrt(var));
  }
  return out;
}

}  // namespace raman
