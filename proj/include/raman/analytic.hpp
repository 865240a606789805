#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "raman/error.hpp"
#include "raman/model.hpp"
#include "raman/noise.hpp"

namespace raman {

struct AnalyticPrediction {
  std::string name;
  double one_minus_F = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  std::optional<bool> regime_ok;

  double term(const std::string& label) const {
    for (const auto& [k, v] : terms)
      if (k == label) return v;
    throw InvalidArgument("AnalyticPrediction: no term named " + label);
  }
};

inline void to_json(nlohmann::json& j, const AnalyticPrediction& a) {
  j = nlohmann::json{{"name", a.name}, {"one_minus_F", a.one_minus_F}};
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [k, v] : a.terms) t[k] = v;
  j["terms"] = t;
  j["regime_ok"] = a.regime_ok ? nlohmann::json(*a.regime_ok) : nlohmann::json(nullptr);
}

namespace detail {

inline AnalyticPrediction make_prediction(std::string name, std::vector<std::pair<std::string, double>> terms) {
  AnalyticPrediction a;
  a.name = std::move(name);
  for (const auto& [k, v] : terms) a.one_minus_F += v;
  a.terms = std::move(terms);
  return a;
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw InvalidArgument(std::string(what) + " must be positive");
}

}  // namespace detail

// Large-kappa Raman photon: accumulated phase on |e> plus spontaneous-emission
// noise at the r-g transition frequency.
inline AnalyticPrediction raman_large_kappa(double sigma, double beta, double gamma_p, double xi, double delta) {
  detail::require_positive(xi, "xi");
  detail::require_positive(gamma_p, "gamma_p");
  const double s2 = sigma * sigma;
  const double accumulated = 2.0 * s2 / (gamma_p * gamma_p * (1.0 + beta / xi));
  const double spontaneous = 2.0 * s2 / (delta * delta + beta * beta) * (gamma_p + 2.0 * beta) / gamma_p;
  return detail::make_prediction("raman_large_kappa",
                                 {{"accumulated_phase", accumulated}, {"direct_spontaneous", spontaneous}});
}

inline AnalyticPrediction two_level(double sigma, double beta, double gamma_p) {
  detail::require_positive(gamma_p, "gamma_p");
  return detail::make_prediction("two_level",
                                 {{"excited_state", 2.0 * sigma * sigma / (gamma_p * (gamma_p + beta))}});
}

inline AnalyticPrediction raman_filtered(double sigma, double beta, double gamma_p, double xi) {
  detail::require_positive(xi, "xi");
  detail::require_positive(gamma_p, "gamma_p");
  return detail::make_prediction(
      "raman_filtered", {{"accumulated_phase", 2.0 * sigma * sigma / (gamma_p * gamma_p * (1.0 + beta / xi))}});
}

// Finite kappa: the spontaneous term is suppressed by the cavity line and a
// cavity-resonant term appears.
inline AnalyticPrediction raman_good_cavity(double sigma, double beta, double gamma_p, double gamma_eff, double xi,
                                            double delta, double kappa) {
  detail::require_positive(xi, "xi");
  detail::require_positive(gamma_p, "gamma_p");
  detail::require_positive(gamma_eff, "gamma_eff");
  detail::require_positive(kappa, "kappa");
  const double s2 = sigma * sigma;
  const double k2 = kappa * kappa, d2 = 4.0 * delta * delta;
  const double accumulated = 2.0 * s2 / (gamma_p * gamma_p * (1.0 + beta / xi));
  const double spontaneous =
      2.0 * s2 / (delta * delta + beta * beta) * (gamma_eff + 2.0 * beta) / gamma_eff * (k2 / (k2 + d2));
  const double cavity = 8.0 * s2 * kappa / ((k2 + d2) * (kappa + 2.0 * beta));
  return detail::make_prediction(
      "raman_good_cavity",
      {{"accumulated_phase", accumulated}, {"direct_spontaneous", spontaneous}, {"cavity_resonant", cavity}});
}

// Ground-state dephasing with amplitude sigma' and rate beta'.
inline AnalyticPrediction ground_state(double sigma_g, double beta_g, double xi) {
  detail::require_positive(xi, "xi");
  return detail::make_prediction("ground_state", {{"ground_state", 2.0 * sigma_g * sigma_g / (xi * (xi + beta_g))}});
}

// Spontaneous return to |e> at rate xi_e = Omega^2 gamma_e / (4 Delta^2)
// randomizes the emission time.
inline double return_rate(double omega, double delta, double gamma_e) {
  if (delta == 0.0) throw InvalidArgument("time_jitter: delta must be nonzero");
  return omega * omega / (4.0 * delta * delta) * gamma_e;
}

inline AnalyticPrediction time_jitter(double omega, double delta, double gamma_e, double xi) {
  detail::require_positive(xi, "xi");
  const double xi_e = return_rate(omega, delta, gamma_e);
  return detail::make_prediction("time_jitter", {{"time_jitter", xi_e / (xi_e + xi)}});
}

// Predictions evaluated from raw parameters and an excited-state channel.
struct AnalyticSet {
  AnalyticPrediction raman_large_kappa, raman_filtered, raman_good_cavity, two_level;
};

inline AnalyticSet analytic_predictions(const SystemParams& p, const NoiseChannel& c) {
  const DerivedRates d = derive_rates(p);
  if (!d.xi) throw InvalidArgument("analytic predictions need a nonzero detuning");
  const bool ok = regime_check(p).all_pass();
  AnalyticSet s{raman_large_kappa(c.sigma, c.beta, d.gamma_p, *d.xi, p.delta),
                raman_filtered(c.sigma, c.beta, d.gamma_p, *d.xi),
                raman_good_cavity(c.sigma, c.beta, d.gamma_p, d.gamma_eff, *d.xi, p.delta, p.kappa),
                two_level(c.sigma, c.beta, d.gamma_p)};
  for (auto* a : {&s.raman_large_kappa, &s.raman_filtered, &s.raman_good_cavity}) a->regime_ok = ok;
  return s;
}

}  // namespace raman
