#pragma once

#include <cmath>
#include <complex>

#include "json.hpp"
#include "raman/error.hpp"
#include "raman/trajectory.hpp"

namespace raman {

// Lorentzian single-pole filter. Frequencies follow the dynamics'
// convention: an envelope proportional to exp(-i w t) has frequency w, so the
// Raman line of a step-driven emitter sits at w = zeta.
struct FilterSpec {
  double center = 0.0;
  double fwhm = 1.0;  // power FWHM, equal to the pole width Gamma

  void validate() const {
    if (!(fwhm > 0.0) || !std::isfinite(fwhm) || !std::isfinite(center))
      throw InvalidArgument("FilterSpec: fwhm must be > 0");
  }
};

// Complex amplitude gain for a stationary input exp(-i w t).
inline cplx filter_transmission(const FilterSpec& spec, double omega) {
  const double half = 0.5 * spec.fwhm;
  return half / cplx(half, -(omega - spec.center));
}

// Exact per-step recurrence for y' = -(Gamma/2 + i w_c) y + (Gamma/2) u with u
// held constant across the step.
class OnePoleFilter {
 public:
  OnePoleFilter() = default;
  OnePoleFilter(const FilterSpec& spec, double dt) {
    spec.validate();
    const cplx pole(0.5 * spec.fwhm, spec.center);
    decay_ = std::exp(-pole * dt);
    feed_ = 0.5 * spec.fwhm * (1.0 - decay_) / pole;
    gamma_ = spec.fwhm;
  }

  cplx decay() const { return decay_; }
  cplx feed() const { return feed_; }
  double width() const { return gamma_; }
  cplx step(cplx y, cplx u) const { return decay_ * y + feed_ * u; }

 private:
  cplx decay_{1.0, 0.0};
  cplx feed_{};
  double gamma_ = 1.0;
};

// Filters the photon envelope. The grid is extended by 10/Gamma of zero input
// so the ring-down is kept; e, r, g are dropped.
inline Trajectory apply_filter(const Trajectory& traj, const FilterSpec& spec) {
  spec.validate();
  if (!(traj.dt > 0.0)) throw InvalidArgument("apply_filter: trajectory needs a uniform grid");
  const OnePoleFilter f(spec, traj.dt);
  const std::size_t n = traj.alpha.size();
  const auto extra = static_cast<std::size_t>(std::ceil(10.0 / spec.fwhm / traj.dt));
  Trajectory out;
  out.dt = traj.dt;
  out.seed = traj.seed;
  out.filtered = true;
  out.alpha.resize(n + extra);
  cplx y{};
  if (n > 0) out.alpha[0] = y;
  for (std::size_t k = 1; k < n + extra; ++k) {
    const cplx a0 = k - 1 < n ? traj.alpha[k - 1] : cplx{};
    const cplx a1 = k < n ? traj.alpha[k] : cplx{};
    y = f.step(y, 0.5 * (a0 + a1));
    out.alpha[k] = y;
  }
  out.efficiency = overlap(out.alpha, out.alpha, out.dt).real();
  return out;
}

inline void to_json(nlohmann::json& j, const FilterSpec& f) { j = nlohmann::json{{"center", f.center}, {"fwhm", f.fwhm}}; }

}  // namespace raman
