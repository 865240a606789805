#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "raman/analytic.hpp"
#include "raman/ensemble.hpp"
#include "raman/error.hpp"
#include "raman/model.hpp"
#include "raman/noise.hpp"

namespace raman {

// One named grid axis. Names address a SystemParams rate, the first noise
// channel ("sigma", "beta") or the filter ("filter_center", "filter_fwhm").
struct Axis {
  std::string name;
  std::vector<double> values;
};

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > 0.0) || n == 0) throw InvalidArgument("log grid needs positive bounds and n >= 1");
  std::vector<double> v(n);
  if (n == 1) return {lo};
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

struct SweepSpec {
  std::string name = "sweep";
  SystemParams base;
  std::vector<NoiseChannel> channels;
  std::optional<FilterChoice> filter;
  std::vector<Axis> axes;
  Mode mode = Mode::three_level;
  RunControl control;
  std::uint64_t master_seed = 1;
  // Config rates are multiplied by unit_scale before use (2 pi turns
  // ordinary frequencies into angular ones); outputs are in config units.
  double unit_scale = 1.0;
  std::string unit_name;

  void validate() const {
    if (axes.empty()) throw InvalidArgument("SweepSpec: axes must be non-empty");
    for (const auto& a : axes) {
      if (a.values.empty()) throw InvalidArgument("SweepSpec: axis '" + a.name + "' has no values");
      for (double v : a.values)
        if (!std::isfinite(v)) throw InvalidArgument("SweepSpec: axis '" + a.name + "' has a non-finite value");
    }
    if (!(control.stop > 0.0 && control.stop < 1.0)) throw InvalidArgument("SweepSpec: stop must lie in (0, 1)");
    if (control.max_trials < 100) throw InvalidArgument("SweepSpec: max_trials must be >= 100");
    if (control.min_trials > control.max_trials) throw InvalidArgument("SweepSpec: min_trials exceeds max_trials");
    if (control.lanes < 2) throw InvalidArgument("SweepSpec: lanes must be >= 2");
    if (!(unit_scale > 0.0 && std::isfinite(unit_scale))) throw InvalidArgument("SweepSpec: unit_scale must be > 0");
    if (mode == Mode::three_level_filtered && !filter) throw InvalidArgument("SweepSpec: filtered mode needs a filter");
    base.validate();
    for (const auto& c : channels) c.validate();
  }

  std::size_t point_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
  }

  // Row-major: the last axis varies fastest.
  std::vector<double> point(std::size_t index) const {
    std::vector<double> v(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      const std::size_t m = axes[k].values.size();
      v[k] = axes[k].values[index % m];
      index /= m;
    }
    return v;
  }
};

// Comparator columns applicable to a mode, in output order.
inline std::vector<std::string> comparator_names(Mode mode) {
  switch (mode) {
    case Mode::three_level: return {"raman_large_kappa", "raman_good_cavity", "raman_filtered"};
    case Mode::three_level_filtered: return {"raman_filtered", "raman_large_kappa", "raman_good_cavity"};
    case Mode::two_level: return {"two_level"};
  }
  return {};
}

struct SweepRow {
  std::size_t index = 0;
  std::vector<double> axis_values;  // config units
  SystemParams params;              // internal units
  std::vector<NoiseChannel> channels;
  std::optional<FilterSpec> filter;
  double xi = std::numeric_limits<double>::quiet_NaN();
  std::optional<bool> regime_ok;
  std::vector<AnalyticPrediction> comparators;
  PointResult result;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRow> rows;
  double wall_seconds = 0.0;
};

namespace detail {

inline void apply_axis(const std::string& name, double v, SystemParams& p, std::vector<NoiseChannel>& ch,
                       std::optional<FilterChoice>& f) {
  auto first_channel = [&]() -> NoiseChannel& {
    if (ch.empty()) throw InvalidArgument("axis '" + name + "' needs a noise channel");
    return ch.front();
  };
  if (name == "g0") p.g0 = v;
  else if (name == "kappa") p.kappa = v;
  else if (name == "kappa_wg") p.kappa_wg = v;
  else if (name == "gamma") p.gamma = v;
  else if (name == "delta") p.delta = v;
  else if (name == "delta_c") p.delta_c = v;
  else if (name == "omega") p.omega = v;
  else if (name == "sigma") first_channel().sigma = v;
  else if (name == "beta") first_channel().beta = v;
  else if (name == "filter_center" || name == "filter_fwhm") {
    if (!f) f = FilterChoice{};
    (name == "filter_center" ? f->center : f->fwhm) = v;
  } else
    throw InvalidArgument("unknown axis '" + name + "'");
}

inline void scale_rates(double s, SystemParams& p, std::vector<NoiseChannel>& ch, std::optional<FilterChoice>& f) {
  if (s == 1.0) return;
  for (double* r : {&p.g0, &p.kappa, &p.kappa_wg, &p.gamma, &p.delta, &p.delta_c, &p.omega}) *r *= s;
  if (p.t_max) *p.t_max /= s;
  if (p.dt) *p.dt /= s;
  for (auto& c : ch) {
    c.sigma *= s;
    c.beta *= s;
  }
  if (f) {
    if (f->center) *f->center *= s;
    if (f->fwhm) *f->fwhm *= s;
  }
}

inline const NoiseChannel* excited_channel(const std::vector<NoiseChannel>& ch) {
  for (const auto& c : ch)
    if (c.target == Level::r) return &c;
  return nullptr;
}

}  // namespace detail

// Parameters for one grid point, in internal units, with its comparators
// evaluated fresh from those exact values.
inline SweepRow prepare_row(const SweepSpec& spec, std::size_t index) {
  SweepRow row;
  row.index = index;
  row.axis_values = spec.point(index);
  row.params = spec.base;
  row.channels = spec.channels;
  std::optional<FilterChoice> f = spec.filter;
  for (std::size_t k = 0; k < spec.axes.size(); ++k)
    detail::apply_axis(spec.axes[k].name, row.axis_values[k], row.params, row.channels, f);
  detail::scale_rates(spec.unit_scale, row.params, row.channels, f);
  row.params.validate();
  for (const auto& c : row.channels) c.validate();

  const DerivedRates d = derive_rates(row.params);
  if (d.xi) row.xi = *d.xi;
  const NoiseChannel* c = detail::excited_channel(row.channels);
  const NoiseChannel quiet{0.0, 1.0, Level::r};
  const NoiseChannel& ch = c ? *c : quiet;
  if (spec.mode == Mode::two_level) {
    row.comparators.push_back(two_level(ch.sigma, ch.beta, d.gamma_p));
  } else if (d.xi && *d.xi > 0.0) {
    const AnalyticSet s = analytic_predictions(row.params, ch);
    row.regime_ok = s.raman_large_kappa.regime_ok;
    for (const auto& n : comparator_names(spec.mode)) {
      if (n == "raman_large_kappa") row.comparators.push_back(s.raman_large_kappa);
      if (n == "raman_good_cavity") row.comparators.push_back(s.raman_good_cavity);
      if (n == "raman_filtered") row.comparators.push_back(s.raman_filtered);
    }
  }
  if (spec.mode == Mode::three_level_filtered) {
    try {
      row.filter = (f ? *f : FilterChoice{}).resolve(row.params);
    } catch (const InvalidArgument&) {
      // reported through the point result
    }
  }
  return row;
}

inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult out;
  out.spec = spec;
  const std::size_t n = spec.point_count();
  out.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SweepRow row = prepare_row(spec, i);
    // An unresolvable filter falls through so run_point records the error.
    std::optional<FilterChoice> fc = spec.filter;
    if (row.filter) fc = FilterChoice{row.filter->center, row.filter->fwhm};
    row.result = run_point(row.params, row.channels, spec.mode, fc, spec.control, spec.master_seed, i);
    out.rows.push_back(std::move(row));
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// JSON form of a SweepSpec. Axes are an ordered array of {name, values} or
// {name, log: [lo, hi, n]}.
inline SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("sweep config must be a JSON object");
  static const char* known[] = {"name",   "base",    "channels",   "filter",    "axes",  "mode",
                                "stop",   "min_trials", "max_trials", "master_seed", "lanes", "workers",
                                "estimator", "n_bins", "unit_scale", "unit_name"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidArgument("sweep config: unknown field '" + key + "'");
  }
  SweepSpec s;
  try {
    s.name = j.value("name", s.name);
    if (j.contains("base")) s.base = j.at("base").get<SystemParams>();
    if (j.contains("channels"))
      for (const auto& c : j.at("channels")) s.channels.push_back(c.get<NoiseChannel>());
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      FilterChoice fc;
      if (f.contains("center")) fc.center = f.at("center").get<double>();
      if (f.contains("fwhm")) fc.fwhm = f.at("fwhm").get<double>();
      fc.fwhm_over_xi = f.value("fwhm_over_xi", fc.fwhm_over_xi);
      s.filter = fc;
    }
    if (!j.contains("axes") || !j.at("axes").is_array()) throw InvalidArgument("sweep config: 'axes' must be an array");
    for (const auto& a : j.at("axes")) {
      Axis ax;
      ax.name = a.at("name").get<std::string>();
      if (a.contains("values"))
        ax.values = a.at("values").get<std::vector<double>>();
      else if (a.contains("log")) {
        const auto& l = a.at("log");
        if (!l.is_array() || l.size() != 3) throw InvalidArgument("axis log spec must be [lo, hi, n]");
        ax.values = log_grid(l[0].get<double>(), l[1].get<double>(), l[2].get<std::size_t>());
      } else
        throw InvalidArgument("axis '" + ax.name + "' needs 'values' or 'log'");
      s.axes.push_back(std::move(ax));
    }
    if (j.contains("mode")) s.mode = mode_from_string(j.at("mode").get<std::string>());
    s.control.stop = j.value("stop", s.control.stop);
    s.control.min_trials = j.value("min_trials", s.control.min_trials);
    s.control.max_trials = j.value("max_trials", s.control.max_trials);
    s.control.lanes = j.value("lanes", s.control.lanes);
    s.control.workers = j.value("workers", s.control.workers);
    s.control.n_bins = j.value("n_bins", s.control.n_bins);
    if (j.contains("estimator")) {
      const auto e = j.at("estimator").get<std::string>();
      if (e == "gram") s.control.estimator = Estimator::gram;
      else if (e == "coherence") s.control.estimator = Estimator::coherence;
      else throw InvalidArgument("unknown estimator '" + e + "' (expected gram or coherence)");
    }
    s.master_seed = j.value("master_seed", s.master_seed);
    s.unit_scale = j.value("unit_scale", s.unit_scale);
    s.unit_name = j.value("unit_name", s.unit_name);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("sweep config: ") + e.what());
  }
  if (s.mode == Mode::three_level_filtered && !s.filter) s.filter = FilterChoice{};
  s.validate();
  return s;
}

inline nlohmann::json to_json_spec(const SweepSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["base"] = s.base;
  j["channels"] = s.channels;
  if (s.filter) {
    nlohmann::json f;
    if (s.filter->center) f["center"] = *s.filter->center;
    if (s.filter->fwhm) f["fwhm"] = *s.filter->fwhm;
    f["fwhm_over_xi"] = s.filter->fwhm_over_xi;
    j["filter"] = f;
  }
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : s.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
  j["axes"] = axes;
  j["mode"] = to_string(s.mode);
  j["stop"] = s.control.stop;
  j["min_trials"] = s.control.min_trials;
  j["max_trials"] = s.control.max_trials;
  j["lanes"] = s.control.lanes;
  j["estimator"] = s.control.estimator == Estimator::gram ? "gram" : "coherence";
  j["n_bins"] = s.control.n_bins;
  j["master_seed"] = s.master_seed;
  j["unit_scale"] = s.unit_scale;
  j["unit_name"] = s.unit_name;
  return j;
}

}  // namespace raman
