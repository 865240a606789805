#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>

#include "json.hpp"
#include "raman/error.hpp"

namespace raman {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

// Static rates of the driven Lambda-system and its cavity. All rates are
// angular frequencies in one arbitrary time unit.
struct SystemParams {
  double g0 = 0.0;        // vacuum Rabi coupling
  double kappa = 1.0;     // total cavity decay rate
  double kappa_wg = 1.0;  // cavity decay into the waveguide
  double gamma = 1.0;     // r decay into non-cavity modes
  double delta = 0.0;     // laser detuning from r
  double delta_c = 0.0;   // cavity detuning
  double omega = 0.0;     // step-drive Rabi amplitude
  std::optional<double> t_max;  // horizon; unset means auto
  std::optional<double> dt;     // step; unset means auto

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(finite(g0) && finite(kappa) && finite(kappa_wg) && finite(gamma) && finite(delta) &&
          finite(delta_c) && finite(omega)))
      throw InvalidArgument("SystemParams: non-finite rate");
    if (!(kappa > 0.0)) throw InvalidArgument("SystemParams: kappa must be > 0");
    if (kappa_wg < 0.0 || kappa_wg > kappa) throw InvalidArgument("SystemParams: need 0 <= kappa_wg <= kappa");
    if (gamma < 0.0) throw InvalidArgument("SystemParams: gamma must be >= 0");
    if (g0 < 0.0) throw InvalidArgument("SystemParams: g0 must be >= 0");
    if (omega < 0.0) throw InvalidArgument("SystemParams: omega must be >= 0");
    if (t_max && !(*t_max > 0.0)) throw InvalidArgument("SystemParams: t_max must be > 0");
    if (dt && !(*dt > 0.0)) throw InvalidArgument("SystemParams: dt must be > 0");
  }

  bool operator==(const SystemParams&) const = default;
};

struct DerivedRates {
  double gamma_p = 0.0;
  cplx delta_prime{};
  std::optional<double> xi;    // undefined on resonance
  std::optional<double> zeta;  // undefined on resonance
  double gamma_eff = 0.0;
  double branching = 0.0;
};

inline DerivedRates derive_rates(const SystemParams& p) {
  if (!(p.kappa > 0.0)) throw InvalidArgument("derive_rates: kappa must be > 0");
  DerivedRates d;
  const double purcell_rate = 4.0 * p.g0 * p.g0 / p.kappa;
  d.gamma_p = p.gamma + purcell_rate;
  d.delta_prime = cplx(p.delta, -0.5 * d.gamma_p);
  if (p.delta != 0.0) {
    const double w2 = p.omega * p.omega;
    d.xi = w2 * d.gamma_p / (4.0 * p.delta * p.delta);
    d.zeta = -w2 / (4.0 * p.delta);
  }
  const double k2 = p.kappa * p.kappa;
  const double d2 = 4.0 * p.delta * p.delta;
  d.gamma_eff = (k2 * d.gamma_p + d2 * p.gamma) / (k2 + d2);
  d.branching = d.gamma_p > 0.0 ? (p.kappa_wg / p.kappa) * purcell_rate / d.gamma_p : 0.0;
  return d;
}

// Dimensionless ratios for the four adiabatic-solution conditions. Each must
// be well below one; `threshold` is only a reporting level.
struct RegimeReport {
  struct Condition {
    std::string name;
    double ratio = 0.0;
    bool pass = false;
  };
  Condition conditions[4];
  double threshold = 0.2;

  bool all_pass() const {
    for (const auto& c : conditions)
      if (!c.pass) return false;
    return true;
  }
};

inline RegimeReport regime_check(const SystemParams& p, double threshold = 0.2) {
  const double inf = std::numeric_limits<double>::infinity();
  const DerivedRates d = derive_rates(p);
  const double ad = std::abs(p.delta);
  RegimeReport rep;
  rep.threshold = threshold;
  // Expansion parameters of the adiabatic series: |Omega/2Delta'| and gamma_p/2|Delta|.
  const double r1 = ad > 0.0 ? std::max(p.omega, d.gamma_p) / (2.0 * ad) : inf;
  double r2 = 0.0, r3 = 0.0, r4 = 0.0;
  if (p.omega > 0.0) {
    r2 = ad > 0.0 ? p.omega * p.g0 / ad / p.kappa : inf;
    if (ad == 0.0)
      r3 = inf;
    else {
      const double raman_rate = p.omega * p.omega / (4.0 * ad * ad) * d.gamma_p;
      r3 = p.gamma > 0.0 ? raman_rate / p.gamma : inf;
    }
    r4 = ad > 0.0 ? std::abs(p.omega * p.omega / (4.0 * p.delta) + p.delta_c) / p.kappa : inf;
  } else if (ad == 0.0) {
    r2 = r3 = r4 = 0.0;
  }
  const char* names[4] = {"drive_and_width_vs_detuning", "cavity_feeding_vs_kappa", "raman_rate_vs_gamma",
                          "stark_shift_vs_kappa"};
  const double ratios[4] = {r1, r2, r3, r4};
  for (int i = 0; i < 4; ++i) rep.conditions[i] = {names[i], ratios[i], ratios[i] < threshold};
  return rep;
}

inline void to_json(nlohmann::json& j, const SystemParams& p) {
  j = nlohmann::json{{"g0", p.g0},         {"kappa", p.kappa}, {"kappa_wg", p.kappa_wg},
                     {"gamma", p.gamma},   {"delta", p.delta}, {"delta_c", p.delta_c},
                     {"omega", p.omega}};
  if (p.t_max) j["t_max"] = *p.t_max;
  if (p.dt) j["dt"] = *p.dt;
}

inline void from_json(const nlohmann::json& j, SystemParams& p) {
  if (!j.is_object()) throw InvalidArgument("SystemParams JSON must be an object");
  static const char* known[] = {"g0", "kappa", "kappa_wg", "gamma", "delta", "delta_c", "omega", "t_max", "dt"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidArgument("SystemParams JSON: unknown field '" + key + "'");
  }
  SystemParams out;
  auto get = [&](const char* key, double& dst) {
    if (j.contains(key)) {
      if (!j.at(key).is_number()) throw InvalidArgument(std::string("SystemParams JSON: '") + key + "' must be a number");
      dst = j.at(key).get<double>();
    }
  };
  get("g0", out.g0);
  get("kappa", out.kappa);
  out.kappa_wg = out.kappa;
  get("kappa_wg", out.kappa_wg);
  get("gamma", out.gamma);
  get("delta", out.delta);
  get("delta_c", out.delta_c);
  get("omega", out.omega);
  for (const char* key : {"t_max", "dt"}) {
    if (j.contains(key) && !j.at(key).is_null()) {
      if (!j.at(key).is_number()) throw InvalidArgument(std::string("SystemParams JSON: '") + key + "' must be a number");
      (std::string(key) == "t_max" ? out.t_max : out.dt) = j.at(key).get<double>();
    }
  }
  out.validate();
  p = out;
}

}  // namespace raman
