#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "raman/analytic.hpp"
#include "raman/dynamics.hpp"
#include "raman/filter.hpp"
#include "raman/noise.hpp"
#include "raman/output.hpp"
#include "raman/perturbation.hpp"
#include "raman/scenario.hpp"
#include "raman/sweep.hpp"

using nlohmann::json;
using namespace raman;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string formats = "csv,json,svg";
  bool dense = false;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path + ": " + e.what());
  }
}

// Writes to the --out file, or stdout when none was given.
void emit_text(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    write_text(out, text);
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

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config field '") + key + "': " + e.what());
  }
}

std::vector<NoiseChannel> channels_from(const json& j) {
  std::vector<NoiseChannel> out;
  if (j.contains("channels"))
    for (const auto& c : j.at("channels")) out.push_back(c.get<NoiseChannel>());
  if (j.contains("channel")) out.push_back(j.at("channel").get<NoiseChannel>());
  return out;
}

void print_outputs(const std::vector<std::filesystem::path>& files) {
  json j = json::array();
  for (const auto& f : files) j.push_back(f.string());
  std::cout << json{{"written", j}}.dump(2) << "\n";
}

int cmd_simulate(const Common& c) {
  const json cfg = load_config(c.config);
  const SystemParams p = field_or(cfg, "params", fig2_point());
  auto channels = channels_from(cfg);
  if (!cfg.contains("channels") && !cfg.contains("channel")) channels = {NoiseChannel{1.0, 10.0, Level::r}};
  const Mode mode = mode_from_string(field_or<std::string>(cfg, "mode", "three_level"));
  const std::uint64_t seed = c.seed.value_or(field_or<std::uint64_t>(cfg, "seed", 1));
  SimulateOptions so;
  so.record_stride = field_or<std::size_t>(cfg, "record_stride", 1);
  Trajectory t;
  if (mode == Mode::two_level) {
    if (channels.size() > 1) throw InvalidArgument("two_level simulate takes one channel");
    t = simulate_two_level(p, channels.empty() ? NoiseChannel{} : channels.front(), seed, so);
  } else {
    t = simulate_stochastic(p, channels, seed, so);
  }
  if (mode == Mode::three_level_filtered) {
    FilterChoice fc;
    if (cfg.contains("filter")) {
      const auto& f = cfg.at("filter");
      if (f.contains("center")) fc.center = f.at("center").get<double>();
      if (f.contains("fwhm")) fc.fwhm = f.at("fwhm").get<double>();
    }
    t = apply_filter(t, fc.resolve(p));
  }
  std::ostringstream os;
  t.write_csv(os);
  emit_text(c.out, os.str());
  std::cerr << json{{"efficiency", t.efficiency}, {"balance_residual", t.balance_residual}, {"steps", t.size()}}.dump()
            << "\n";
  return 0;
}

int cmd_sweep(const Common& c) {
  if (c.config.empty()) throw InvalidArgument("sweep needs --config");
  SweepSpec spec = sweep_spec_from_json(load_config(c.config));
  if (c.seed) spec.master_seed = *c.seed;
  if (c.workers) spec.control.workers = *c.workers;
  const SweepResult res = run_sweep(spec);
  print_outputs(emit_outputs(res, c.out.empty() ? "out" : c.out, spec.name, parse_formats(c.formats)));
  return 0;
}

int cmd_scenario(const Common& c, const std::string& name) {
  ScenarioOptions opt;
  opt.dense = c.dense;
  opt.seed = c.seed;
  opt.workers = c.workers;
  if (c.dense) std::cerr << "warning: --dense grids can take hours of wall-clock time\n";
  const Formats formats = parse_formats(c.formats);
  std::vector<std::filesystem::path> files;
  for (auto& [stem, spec] : scenario_specs(name, opt)) {
    const SweepResult res = run_sweep(spec);
    for (auto& f : emit_outputs(res, c.out.empty() ? "out" : c.out, stem, formats)) files.push_back(f);
  }
  print_outputs(files);
  return 0;
}

int cmd_analytic(const Common& c) {
  const json cfg = load_config(c.config);
  const SystemParams p = field_or(cfg, "params", fig2_point());
  auto channels = channels_from(cfg);
  const NoiseChannel ch = channels.empty() ? NoiseChannel{1.0, 10.0, Level::r} : channels.front();
  const DerivedRates d = derive_rates(p);
  json j;
  j["params"] = p;
  j["channel"] = ch;
  j["derived"] = {{"gamma_p", d.gamma_p},
                  {"xi", d.xi ? json(*d.xi) : json(nullptr)},
                  {"zeta", d.zeta ? json(*d.zeta) : json(nullptr)},
                  {"gamma_eff", d.gamma_eff},
                  {"branching", d.branching}};
  const RegimeReport rep = regime_check(p);
  json conds = json::array();
  for (const auto& k : rep.conditions) conds.push_back({{"name", k.name}, {"ratio", k.ratio}, {"pass", k.pass}});
  j["regime"] = {{"conditions", conds}, {"all_pass", rep.all_pass()}};
  j["two_level"] = two_level(ch.sigma, ch.beta, d.gamma_p);
  if (d.xi && *d.xi > 0.0) {
    const AnalyticSet s = analytic_predictions(p, ch);
    j["raman_large_kappa"] = s.raman_large_kappa;
    j["raman_filtered"] = s.raman_filtered;
    j["raman_good_cavity"] = s.raman_good_cavity;
    if (cfg.contains("ground")) {
      const auto& g = cfg.at("ground");
      j["ground_state"] = ground_state(g.at("sigma").get<double>(), g.at("beta").get<double>(), *d.xi);
    }
    if (cfg.contains("gamma_e"))
      j["time_jitter"] = time_jitter(p.omega, p.delta, cfg.at("gamma_e").get<double>(), *d.xi);
  }
  emit_text(c.out, j.dump(2) + "\n");
  return 0;
}

int cmd_spectral(const Common& c) {
  const json cfg = load_config(c.config);
  const SystemParams p = field_or(cfg, "params", fig2_point());
  auto channels = channels_from(cfg);
  const NoiseChannel ch = channels.empty() ? NoiseChannel{1.0, 10.0, Level::r} : channels.front();
  const DerivedRates d = derive_rates(p);
  const double eta = field_or(cfg, "eta", d.xi.value_or(0.0));
  const json w = field_or(cfg, "omega", json::object());
  const double lo = field_or(w, "min", -2.0 * std::abs(p.delta) - 50.0);
  const double hi = field_or(w, "max", 2.0 * std::abs(p.delta) + 50.0);
  const auto n = field_or<std::size_t>(w, "n", 2001);
  if (n < 2 || !(hi > lo)) throw InvalidArgument("spectral: need omega.max > omega.min and omega.n >= 2");
  const TransferFunction tf(p);
  std::ostringstream os;
  os << "omega,H,H_three_pole,S_r\n";
  for (std::size_t k = 0; k < n; ++k) {
    const double om = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    os << format_number(om) << ',' << format_number(tf.generic(om, eta)) << ','
       << format_number(tf.three_pole(om, eta)) << ',' << format_number(noise_psd(ch, om, eta)) << '\n';
  }
  emit_text(c.out, os.str());
  json poles = json::array();
  for (cplx z : tf.poles(eta)) poles.push_back({z.real(), z.imag()});
  std::cerr << json{{"eta", eta}, {"poles", poles}}.dump() << "\n";
  return 0;
}

int cmd_noise_check(const Common& c) {
  const json cfg = load_config(c.config);
  const auto paths_n = field_or<std::size_t>(cfg, "paths", 10000);
  const std::uint64_t seed = c.seed.value_or(field_or<std::uint64_t>(cfg, "seed", 1));
  std::optional<TrapEnsemble> traps;
  NoiseChannel ch = field_or(cfg, "channel", NoiseChannel{1.0, 10.0, Level::r});
  if (cfg.contains("traps")) {
    TrapEnsemble te;
    for (const auto& t : cfg.at("traps"))
      te.traps.push_back({t.at("coupling").get<double>(), t.at("rate_01").get<double>(), t.at("rate_10").get<double>()});
    te.validate();
    traps = te;
    ch.sigma = std::sqrt(te.variance());
    ch.beta = te.rate();
  }
  if (!(ch.sigma > 0.0)) throw InvalidArgument("noise-check needs sigma > 0");
  const double dt = field_or(cfg, "dt", 0.05 / ch.beta);
  const auto steps = field_or<std::size_t>(cfg, "steps", static_cast<std::size_t>(std::ceil(4.0 / (ch.beta * dt))) + 1);
  const std::vector<std::size_t> lags{0, static_cast<std::size_t>(std::lround(1.0 / (ch.beta * dt))),
                                      static_cast<std::size_t>(std::lround(3.0 / (ch.beta * dt)))};
  std::vector<NoisePath> paths;
  paths.reserve(paths_n);
  for (std::size_t i = 0; i < paths_n; ++i)
    paths.push_back(traps ? sample_trap_path(*traps, 0.0, dt, steps, stream_key(seed, i))
                          : sample_ou_path(ch, 0.0, dt, steps, stream_key(seed, i)));
  const auto est = estimate_autocovariance(paths, lags, traps.has_value());
  json rows = json::array();
  bool ok = true;
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const double theory = ch.correlation(est.lags[k]);
    const double diff = est.mean[k] - theory;
    // trap variance at lag 0 is exact, so its stderr can vanish
    const bool exact = est.stderr_[k] == 0.0;
    const double z = exact ? 0.0 : diff / est.stderr_[k];
    ok = ok && (exact ? std::abs(diff) <= 1e-12 * std::abs(theory) + 1e-15 : std::abs(z) < 3.0);
    rows.push_back({{"lag", est.lags[k]}, {"estimate", est.mean[k]}, {"stderr", est.stderr_[k]}, {"theory", theory},
                    {"z", z}});
  }
  const json j{{"source", traps ? "traps" : "ou"}, {"sigma", ch.sigma}, {"beta", ch.beta}, {"paths", paths_n},
               {"dt", dt}, {"lags", rows}, {"within_3se", ok}};
  emit_text(c.out, j.dump(2) + "\n");
  return 0;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raman single-photon indistinguishability simulator"};
  app.require_subcommand(1);
  Common c;
  std::string scenario_name;
  auto add_common = [&](CLI::App* s, bool sweep_flags) {
    s->add_option("--config", c.config, "JSON configuration file");
    s->add_option("--out", c.out, sweep_flags ? "output directory" : "output file (default stdout)");
    s->add_option("--seed", c.seed, "master seed");
    if (sweep_flags) {
      s->add_option("--workers", c.workers, "worker threads");
      s->add_option("--formats", c.formats, "comma list of csv,json,svg");
    }
  };
  auto* simulate = app.add_subcommand("simulate", "one trajectory as CSV");
  add_common(simulate, false);
  auto* sweep = app.add_subcommand("sweep", "parameter sweep from a JSON spec");
  add_common(sweep, true);
  auto* scenario = app.add_subcommand("scenario", "built-in figure and device scenarios");
  add_common(scenario, true);
  scenario->add_option("name", scenario_name, "fig2, fig3a, fig3b, qdot_raman or qdot_two_level")->required();
  scenario->add_flag("--dense", c.dense, "larger grids");
  auto* analytic = app.add_subcommand("analytic", "closed-form predictions");
  add_common(analytic, false);
  auto* spectral = app.add_subcommand("spectral", "transfer function and noise PSD table");
  add_common(spectral, false);
  auto* noise = app.add_subcommand("noise-check", "autocovariance of sampled noise paths");
  add_common(noise, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }
  try {
    if (*simulate) return cmd_simulate(c);
    if (*sweep) return cmd_sweep(c);
    if (*scenario) return cmd_scenario(c, scenario_name);
    if (*analytic) return cmd_analytic(c);
    if (*spectral) return cmd_spectral(c);
    if (*noise) return cmd_noise_check(c);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const json::exception& e) {
    return fail("invalid_argument", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 1;
}
