#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "raman/error.hpp"
#include "raman/sweep.hpp"

namespace raman {

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> n{"fig2", "fig3a", "fig3b", "qdot_raman", "qdot_two_level"};
  return n;
}

struct ScenarioOptions {
  bool dense = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<double> stop;
  std::optional<std::size_t> max_trials;
};

namespace detail {

inline SystemParams bad_cavity_base() {
  SystemParams p;
  p.g0 = 50;
  p.kappa = p.kappa_wg = 1000;
  p.gamma = 1;
  p.omega = 10;
  return p;
}

inline SystemParams good_cavity_base() {
  SystemParams p = bad_cavity_base();
  p.g0 = 5;
  p.kappa = p.kappa_wg = 10;
  return p;
}

const std::vector<double> kDeskBeta{0.1, 1, 10, 100};

// Quantum-dot numbers are ordinary frequencies in GHz; unit_scale 2 pi makes
// them angular rates per ns.
inline SweepSpec qdot_base(const std::string& name, Mode mode) {
  SweepSpec s;
  s.name = name;
  s.mode = mode;
  s.unit_scale = 2.0 * std::numbers::pi;
  s.unit_name = "GHz";
  s.base.g0 = 8;
  s.base.kappa = s.base.kappa_wg = 33;
  s.base.gamma = 1.0 / (2.0 * std::numbers::pi * 0.5);  // (0.5 ns)^-1
  if (mode != Mode::two_level) {
    s.base.omega = 16;
    s.base.delta = 40;
  }
  // sigma^2 / beta = 0.16 GHz at beta = 80 GHz
  s.channels = {NoiseChannel{std::sqrt(0.16 * 80.0), 80.0, Level::r}};
  s.axes = {{"beta", {80.0}}};
  if (mode == Mode::three_level_filtered) s.filter = FilterChoice{std::nullopt, 4.0};
  return s;
}

}  // namespace detail

// The sweeps making up a named scenario, each with its output stem.
inline std::vector<std::pair<std::string, SweepSpec>> scenario_specs(const std::string& name,
                                                                     const ScenarioOptions& opt = {}) {
  std::vector<std::pair<std::string, SweepSpec>> out;
  const NoiseChannel unit_noise{1.0, 1.0, Level::r};
  auto grid = [&](std::vector<double> desk, double lo, double hi, std::size_t n) {
    return opt.dense ? log_grid(lo, hi, n) : desk;
  };
  if (name == "fig2") {
    SweepSpec s;
    s.name = "fig2";
    s.base = detail::bad_cavity_base();
    s.channels = {unit_noise};
    s.axes = {{"delta", grid({20, 40, 80, 160}, 10, 320, 11)}, {"beta", grid(detail::kDeskBeta, 0.01, 1000, 11)}};
    out.emplace_back("fig2", s);
  } else if (name == "fig3a") {
    SweepSpec s;
    s.name = "fig3a";
    s.mode = Mode::three_level_filtered;
    s.base = detail::bad_cavity_base();
    s.channels = {unit_noise};
    s.filter = FilterChoice{};
    s.axes = {{"delta", grid({40, 80, 160}, 40, 320, 4)}, {"beta", grid(detail::kDeskBeta, 0.01, 1000, 11)}};
    out.emplace_back("fig3a", s);
  } else if (name == "fig3b") {
    SweepSpec s;
    s.name = "fig3b";
    s.base = detail::good_cavity_base();
    s.channels = {unit_noise};
    s.axes = {{"delta", grid({20, 40}, 10, 160, 5)}, {"beta", grid(detail::kDeskBeta, 0.01, 1000, 11)}};
    out.emplace_back("fig3b", s);
    SweepSpec t = s;
    t.name = "fig3b_two_level";
    t.mode = Mode::two_level;
    t.base.omega = 0;
    t.axes = {{"beta", s.axes.back().values}};
    out.emplace_back("fig3b_two_level", t);
  } else if (name == "qdot_raman") {
    out.emplace_back("qdot_raman", detail::qdot_base("qdot_raman", Mode::three_level_filtered));
  } else if (name == "qdot_two_level") {
    out.emplace_back("qdot_two_level", detail::qdot_base("qdot_two_level", Mode::two_level));
  } else {
    std::string known;
    for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown scenario '" + name + "'; known scenarios: " + known);
  }
  for (auto& [_, s] : out) {
    if (opt.seed) s.master_seed = *opt.seed;
    if (opt.workers) s.control.workers = *opt.workers;
    if (opt.stop) s.control.stop = *opt.stop;
    if (opt.max_trials) s.control.max_trials = *opt.max_trials;
    s.validate();
  }
  return out;
}

struct ScenarioReport {
  std::string name;
  std::vector<std::pair<std::string, SweepResult>> parts;
};

inline ScenarioReport run_scenario(const std::string& name, const ScenarioOptions& opt = {}) {
  ScenarioReport rep;
  rep.name = name;
  for (auto& [stem, spec] : scenario_specs(name, opt)) rep.parts.emplace_back(stem, run_sweep(spec));
  return rep;
}

}  // namespace raman
