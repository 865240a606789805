#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "raman/dynamics.hpp"
#include "raman/error.hpp"
#include "raman/filter.hpp"
#include "raman/hom.hpp"
#include "raman/model.hpp"
#include "raman/noise.hpp"
#include "raman/rng.hpp"

namespace raman {

enum class Mode { three_level, three_level_filtered, two_level };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::three_level: return "three_level";
    case Mode::three_level_filtered: return "three_level_filtered";
    case Mode::two_level: return "two_level";
  }
  return "?";
}

inline Mode mode_from_string(const std::string& s) {
  if (s == "three_level") return Mode::three_level;
  if (s == "three_level_filtered") return Mode::three_level_filtered;
  if (s == "two_level") return Mode::two_level;
  throw InvalidArgument("unknown mode '" + s + "' (expected three_level, three_level_filtered or two_level)");
}

enum class Estimator { gram, coherence };

// Filter placement; unset fields fall back to the Raman line and 20 xi.
struct FilterChoice {
  std::optional<double> center;
  std::optional<double> fwhm;
  double fwhm_over_xi = 20.0;

  FilterSpec resolve(const SystemParams& p) const {
    const DerivedRates d = derive_rates(p);
    FilterSpec f;
    if (center)
      f.center = *center;
    else if (d.zeta)
      f.center = *d.zeta;
    else
      throw InvalidArgument("filter center defaults to the Raman line, which needs a nonzero detuning");
    if (fwhm)
      f.fwhm = *fwhm;
    else if (d.xi && *d.xi > 0.0)
      f.fwhm = fwhm_over_xi * *d.xi;
    else
      throw InvalidArgument("filter width defaults to a multiple of xi, which needs a nonzero detuning and drive");
    f.validate();
    return f;
  }
};

struct RunControl {
  double stop = 0.1;            // target F_stderr / (1 - F)
  std::size_t min_trials = 100;
  std::size_t max_trials = 2000;
  std::size_t lanes = 16;       // trajectories per lockstep batch
  std::size_t workers = 1;
  Estimator estimator = Estimator::gram;
  std::size_t n_bins = 512;     // coherence estimator only
  StepRule rule{};
};

struct PointResult {
  IndistinguishabilityResult mc;                      // filtered photon in filtered mode
  std::optional<IndistinguishabilityResult> unfiltered;  // filtered mode only
  std::optional<FilterSpec> filter;
  Grid grid;
  std::size_t trials = 0;
  bool converged = false;
  double max_balance = 0.0;
  double wall_seconds = 0.0;
  std::optional<std::string> error;
};

// Runs `n` independent jobs on up to `workers` threads. Job i writes only to
// its own slot, so the outcome is independent of scheduling.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::uint64_t trajectory_key(std::uint64_t master_seed, std::size_t point_index, std::size_t trajectory) {
  return stream_key(master_seed, point_index, trajectory);
}

inline bool noise_free(std::span<const NoiseChannel> channels) {
  return std::all_of(channels.begin(), channels.end(), [](const NoiseChannel& c) { return c.sigma == 0.0; });
}

// Monte-Carlo estimate of F at one parameter point. Trajectory t of the point
// uses key (master_seed, point_index, t); batches of `lanes` consecutive
// trajectories run in lockstep. Rounds of batches are added until the stop
// rule holds or max_trials is reached.
inline PointResult run_point(const SystemParams& params, const std::vector<NoiseChannel>& channels, Mode mode,
                             const std::optional<FilterChoice>& filter_choice, const RunControl& ctl,
                             std::uint64_t master_seed, std::size_t point_index) {
  const auto t0 = std::chrono::steady_clock::now();
  PointResult out;
  std::size_t batches_done = 0;
  std::size_t lanes = 2;
  try {
    const Model model = mode == Mode::two_level ? Model::two_level : Model::three_level;
    const bool filtered = mode == Mode::three_level_filtered;
    if (filtered) out.filter = (filter_choice ? *filter_choice : FilterChoice{}).resolve(params);
    const bool quiet = noise_free(channels);
    lanes = quiet ? 2 : std::max<std::size_t>(ctl.lanes, 2);
    const bool coherence = ctl.estimator == Estimator::coherence;
    out.grid = resolve_grid(params, channels, model, coherence ? ctl.n_bins - 1 : 1, ctl.rule);

    BatchOptions bo;
    bo.filter = out.filter;
    if (coherence) bo.n_bins = ctl.n_bins;
    const BatchSimulator sim(params, channels, model, out.grid, bo);

    GramEstimator gram, gram_f;
    CoherenceAccumulator acc, acc_f;
    if (coherence) {
      acc = CoherenceAccumulator(ctl.n_bins, out.grid.t_max);
      acc_f = CoherenceAccumulator(ctl.n_bins, out.grid.t_max);
    }
    auto absorb = [&](std::size_t b, const BatchResult& r) {
      if (coherence) {
        for (std::size_t k = 0; k < r.lanes; ++k) {
          acc.accumulate_nodes(r.binned[k], r.efficiency[k], b * lanes + k);
          if (filtered) acc_f.accumulate_nodes(r.binned_filtered[k], r.efficiency_filtered[k], b * lanes + k);
        }
      } else {
        gram.add_batch(r.gram, r.lanes, b);
        if (filtered) gram_f.add_batch(r.gram_filtered, r.lanes, b);
      }
      for (double v : r.balance_residual) out.max_balance = std::max(out.max_balance, v);
    };
    auto estimate = [&](bool f) {
      if (coherence) return (f ? acc_f : acc).estimate_F();
      return (f ? gram_f : gram).estimate();
    };
    auto run_batches = [&](std::size_t count) {
      std::vector<BatchResult> results(count);
      parallel_for(count, ctl.workers, [&](std::size_t i) {
        const std::size_t b = batches_done + i;
        std::vector<std::uint64_t> keys(lanes);
        for (std::size_t k = 0; k < lanes; ++k) keys[k] = trajectory_key(master_seed, point_index, b * lanes + k);
        results[i] = sim.run(keys);
      });
      for (std::size_t i = 0; i < count; ++i) absorb(batches_done + i, results[i]);
      batches_done += count;
    };

    const std::size_t max_batches = quiet ? 1 : std::max<std::size_t>(1, ctl.max_trials / lanes);
    std::size_t target = quiet ? 1 : std::min(max_batches, (ctl.min_trials + lanes - 1) / lanes);
    target = std::max<std::size_t>(target, quiet ? 1 : 2);
    while (true) {
      run_batches(target - batches_done);
      out.mc = estimate(filtered);
      const double deficit = 1.0 - out.mc.F;
      if (quiet) {
        out.converged = true;
        break;
      }
      if (deficit > 0.0 && std::isfinite(out.mc.F_stderr) && out.mc.F_stderr <= ctl.stop * deficit) {
        out.converged = true;
        break;
      }
      if (batches_done >= max_batches) break;
      // Error falls as 1/sqrt(trials); aim 20% past the projected need.
      double grow = 2.0;
      if (deficit > 0.0 && std::isfinite(out.mc.F_stderr)) {
        const double ratio = out.mc.F_stderr / (ctl.stop * deficit);
        grow = std::clamp(1.2 * ratio * ratio, 1.25, 4.0);
      }
      target = std::min(max_batches, static_cast<std::size_t>(std::ceil(batches_done * grow)));
    }
    if (filtered) out.unfiltered = estimate(false);
    out.trials = batches_done * lanes;
    out.mc.filtered = filtered;
    out.mc.master_seed = master_seed;
  } catch (const Error& e) {
    out.error = e.kind() + ": " + e.what();
    out.trials = batches_done * lanes;
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace raman
