#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raman/error.hpp"
#include "raman/filter.hpp"
#include "raman/model.hpp"
#include "raman/noise.hpp"
#include "raman/rng.hpp"
#include "raman/trajectory.hpp"

namespace raman {

enum class Model { three_level, two_level };

// Resolved uniform integration grid on [0, t_max].
struct Grid {
  double t_max = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
};

// Default step. Coherent rates and the noise rate are resolved by `divisor`
// steps per unit time; the cavity damping rate only needs `damping_divisor`
// because the field follows r adiabatically and RK4 is stable well beyond it.
struct StepRule {
  double divisor = 20.0;
  double damping_divisor = 2.0;
};

inline double default_t_max(const SystemParams& p, Model model) {
  const DerivedRates d = derive_rates(p);
  if (model == Model::two_level) {
    // Slowest eigenmode of the r-g pair; near strong coupling this is well
    // below gamma_p / 2.
    const cplx a = -0.5 * p.gamma, b = -(kI * p.delta_c + 0.5 * p.kappa);
    const cplx root = std::sqrt(0.25 * (a - b) * (a - b) - p.g0 * p.g0);
    const double slow = std::min(-(0.5 * (a + b) + root).real(), -(0.5 * (a + b) - root).real());
    if (!(slow > 0.0)) throw InvalidArgument("default t_max needs a decaying two-level system; set t_max explicitly");
    return 10.0 / (2.0 * slow);
  }
  if (!d.xi || !(*d.xi > 0.0))
    throw InvalidArgument("default t_max needs a nonzero detuning and drive; set t_max explicitly");
  return 10.0 / *d.xi;
}

inline double default_dt(const SystemParams& p, std::span<const NoiseChannel> channels, Model model,
                         StepRule rule = {}) {
  const DerivedRates d = derive_rates(p);
  double fastest = 0.0;
  if (model == Model::three_level) {
    fastest = std::max(std::abs(d.delta_prime), p.omega);
    fastest = std::max(fastest, std::abs(p.delta_c));
  } else {
    fastest = p.g0;
  }
  for (const auto& c : channels)
    if (c.sigma > 0.0) fastest = std::max({fastest, c.beta, c.sigma});
  return 1.0 / std::max(fastest * rule.divisor, p.kappa * rule.damping_divisor);
}

// `align` forces the step count to a multiple, so coarse bins land on nodes.
inline Grid resolve_grid(const SystemParams& p, std::span<const NoiseChannel> channels, Model model,
                         std::size_t align = 1, StepRule rule = {}) {
  p.validate();
  Grid g;
  g.t_max = p.t_max ? *p.t_max : default_t_max(p, model);
  const double dt0 = p.dt ? *p.dt : default_dt(p, channels, model, rule);
  align = std::max<std::size_t>(align, 1);
  auto steps = static_cast<std::size_t>(std::ceil(g.t_max / dt0 - 1e-9));
  steps = std::max<std::size_t>(steps, 1);
  steps = (steps + align - 1) / align * align;
  g.steps = steps;
  g.dt = g.t_max / static_cast<double>(steps);
  return g;
}

// Energy shifts for one trajectory, sampled at the step midpoints
// t = (n + 1/2) dt. Empty vectors mean no shift on that level.
struct LevelNoise {
  std::vector<double> e, r, g;
};

// Each channel draws from its own stream so block-wise and whole-path
// generation give identical values.
inline std::uint64_t channel_stream(std::uint64_t trajectory_key, std::size_t channel_index) {
  return stream_key(trajectory_key, channel_index);
}

inline LevelNoise sample_level_noise(std::span<const NoiseChannel> channels, const Grid& grid, std::uint64_t key) {
  LevelNoise out;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].sigma == 0.0) continue;
    const NoisePath p = sample_ou_path(channels[c], 0.5 * grid.dt, grid.dt, grid.steps, channel_stream(key, c));
    auto& dst = channels[c].target == Level::e ? out.e : channels[c].target == Level::r ? out.r : out.g;
    if (dst.empty()) dst.assign(grid.steps, 0.0);
    for (std::size_t n = 0; n < grid.steps; ++n) dst[n] += p.values[n];
  }
  return out;
}

struct BatchOptions {
  bool record = false;           // keep full amplitude arrays (one per lane)
  std::size_t record_stride = 1;
  std::size_t n_bins = 0;        // node-sampled envelope for coherence accumulation
  std::optional<FilterSpec> filter;
  std::size_t block = 256;
};

// Output of one lockstep batch. Gram matrices hold trapezoid overlaps
// integral alpha_i conj(alpha_j) dt on the integration grid.
struct BatchResult {
  std::size_t lanes = 0;
  Grid grid;
  std::vector<cplx> gram;           // lanes x lanes, row-major
  std::vector<cplx> gram_filtered;  // empty without a filter
  std::vector<double> efficiency;
  std::vector<double> efficiency_filtered;
  std::vector<double> balance_residual;
  std::vector<std::vector<cplx>> binned;           // per lane, n_bins nodes
  std::vector<std::vector<cplx>> binned_filtered;  // per lane, n_bins nodes
  std::vector<Trajectory> trajectories;            // only with record

  cplx gram_at(std::size_t i, std::size_t j) const { return gram[i * lanes + j]; }
  cplx gram_filtered_at(std::size_t i, std::size_t j) const { return gram_filtered[i * lanes + j]; }
};

namespace detail {

struct Rk4Coefficients {
  double half_omega, delta, half_gamma, g0, half_kappa, delta_c;
};

struct LaneState {
  double* er;
  double* ei;
  double* rr;
  double* ri;
  double* gr;
  double* gi;
  double* int_r;
  double* int_g;
};

using vec4 = double __attribute__((vector_size(32)));
inline constexpr std::size_t kLaneWidth = 4;

inline vec4 load4(const double* p) {
  vec4 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store4(double* p, vec4 v) { std::memcpy(p, &v, sizeof v); }

// One RK4 step for every lane; level shifts are held at the step midpoint.
// |r|^2 and |g|^2 are integrated alongside the state with the same stages.
// K must be a multiple of kLaneWidth.
template <bool NoiseE, bool NoiseR, bool NoiseG>
inline void rk4_lanes(const Rk4Coefficients& c, double h, std::size_t K, const LaneState& st, const double* de,
                      const double* dr, const double* dg) {
  const vec4 hh = vec4{} + 0.5 * h;
  const vec4 h1 = vec4{} + h;
  const vec4 h6 = vec4{} + h / 6.0;
  const vec4 two = vec4{} + 2.0;
  const vec4 ho = vec4{} + c.half_omega, hg = vec4{} + c.half_gamma, hk = vec4{} + c.half_kappa,
             g0 = vec4{} + c.g0, w_r = vec4{} + c.delta, w_g = vec4{} + c.delta_c;
  for (std::size_t k = 0; k < K; k += kLaneWidth) {
    const vec4 xe = NoiseE ? load4(de + k) : vec4{};
    const vec4 wr = NoiseR ? w_r + load4(dr + k) : w_r;
    const vec4 wg = NoiseG ? w_g + load4(dg + k) : w_g;
    const vec4 er = load4(st.er + k), ei = load4(st.ei + k), rr = load4(st.rr + k), ri = load4(st.ri + k),
               gr = load4(st.gr + k), gi = load4(st.gi + k);
#define RAMAN_DERIV(P, ER, EI, RR, RI, GR, GI)                       \
  const vec4 P##er = ho * (RI) + xe * (EI);                          \
  const vec4 P##ei = -ho * (RR) - xe * (ER);                         \
  const vec4 P##rr = -hg * (RR) + wr * (RI) + ho * (EI) + g0 * (GI); \
  const vec4 P##ri = -hg * (RI) - wr * (RR) - ho * (ER) - g0 * (GR); \
  const vec4 P##gr = g0 * (RI) - hk * (GR) + wg * (GI);              \
  const vec4 P##gi = -g0 * (RR) - hk * (GI) - wg * (GR)
    RAMAN_DERIV(a, er, ei, rr, ri, gr, gi);
    const vec4 s_er = er + hh * aer, s_ei = ei + hh * aei, s_rr = rr + hh * arr, s_ri = ri + hh * ari,
               s_gr = gr + hh * agr, s_gi = gi + hh * agi;
    RAMAN_DERIV(b, s_er, s_ei, s_rr, s_ri, s_gr, s_gi);
    const vec4 t_er = er + hh * ber, t_ei = ei + hh * bei, t_rr = rr + hh * brr, t_ri = ri + hh * bri,
               t_gr = gr + hh * bgr, t_gi = gi + hh * bgi;
    RAMAN_DERIV(c, t_er, t_ei, t_rr, t_ri, t_gr, t_gi);
    const vec4 u_er = er + h1 * cer, u_ei = ei + h1 * cei, u_rr = rr + h1 * crr, u_ri = ri + h1 * cri,
               u_gr = gr + h1 * cgr, u_gi = gi + h1 * cgi;
    RAMAN_DERIV(d, u_er, u_ei, u_rr, u_ri, u_gr, u_gi);
#undef RAMAN_DERIV
    store4(st.er + k, er + h6 * (aer + two * ber + two * cer + der));
    store4(st.ei + k, ei + h6 * (aei + two * bei + two * cei + dei));
    store4(st.rr + k, rr + h6 * (arr + two * brr + two * crr + drr));
    store4(st.ri + k, ri + h6 * (ari + two * bri + two * cri + dri));
    store4(st.gr + k, gr + h6 * (agr + two * bgr + two * cgr + dgr));
    store4(st.gi + k, gi + h6 * (agi + two * bgi + two * cgi + dgi));
    const vec4 p1r = rr * rr + ri * ri, p2r = s_rr * s_rr + s_ri * s_ri, p3r = t_rr * t_rr + t_ri * t_ri,
               p4r = u_rr * u_rr + u_ri * u_ri;
    const vec4 p1g = gr * gr + gi * gi, p2g = s_gr * s_gr + s_gi * s_gi, p3g = t_gr * t_gr + t_gi * t_gi,
               p4g = u_gr * u_gr + u_gi * u_gi;
    store4(st.int_r + k, load4(st.int_r + k) + h6 * (p1r + two * p2r + two * p3r + p4r));
    store4(st.int_g + k, load4(st.int_g + k) + h6 * (p1g + two * p2g + two * p3g + p4g));
  }
}

using Rk4Kernel = void (*)(const Rk4Coefficients&, double, std::size_t, const LaneState&, const double*,
                           const double*, const double*);

inline Rk4Kernel select_kernel(bool ne, bool nr, bool ng) {
  static constexpr Rk4Kernel table[8] = {
      &rk4_lanes<false, false, false>, &rk4_lanes<false, false, true>, &rk4_lanes<false, true, false>,
      &rk4_lanes<false, true, true>,   &rk4_lanes<true, false, false>, &rk4_lanes<true, false, true>,
      &rk4_lanes<true, true, false>,   &rk4_lanes<true, true, true>};
  return table[(ne ? 4 : 0) + (nr ? 2 : 0) + (ng ? 1 : 0)];
}

// Upper-triangle update gram[i][j] += a_i conj(a_j) for i <= j.
inline void gram_update(std::size_t K, const double* ar, const double* ai, double* gre, double* gim, double w) {
  for (std::size_t i = 0; i < K; ++i) {
    const double xr = w * ar[i], xi = w * ai[i];
    double* row_re = gre + i * K;
    double* row_im = gim + i * K;
    for (std::size_t j = i; j < K; ++j) {
      row_re[j] += xr * ar[j] + xi * ai[j];
      row_im[j] += xi * ar[j] - xr * ai[j];
    }
  }
}

inline std::vector<cplx> gram_finish(std::size_t K, const std::vector<double>& gre, const std::vector<double>& gim,
                                     double scale) {
  std::vector<cplx> out(K * K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i; j < K; ++j) {
      const cplx v(gre[i * K + j] * scale, gim[i * K + j] * scale);
      out[i * K + j] = v;
      out[j * K + i] = std::conj(v);
    }
  return out;
}

}  // namespace detail

// Integrates a batch of independent trajectories in lockstep. Lane k draws
// its noise from stream `keys[k]` (or uses `explicit_noise[k]`), so a lane's
// trajectory does not depend on which batch it runs in.
class BatchSimulator {
 public:
  BatchSimulator(SystemParams params, std::vector<NoiseChannel> channels, Model model, Grid grid, BatchOptions opts = {})
      : p_(std::move(params)), channels_(std::move(channels)), model_(model), grid_(grid), opts_(std::move(opts)) {
    p_.validate();
    for (const auto& c : channels_) c.validate();
    if (grid_.steps == 0 || !(grid_.dt > 0.0)) throw InvalidArgument("BatchSimulator: empty grid");
    if (opts_.n_bins == 1) throw InvalidArgument("BatchSimulator: n_bins must be 0 or >= 2");
    if (opts_.n_bins >= 2 && grid_.steps % (opts_.n_bins - 1) != 0)
      throw InvalidArgument("BatchSimulator: grid steps must be a multiple of n_bins - 1");
    if (opts_.filter) opts_.filter->validate();
    opts_.record_stride = std::max<std::size_t>(opts_.record_stride, 1);
    opts_.block = std::max<std::size_t>(opts_.block, 1);
  }

  const Grid& grid() const { return grid_; }

  BatchResult run(std::span<const std::uint64_t> keys) const { return run_impl(keys, {}); }

  BatchResult run_with_noise(std::span<const LevelNoise> noise) const {
    std::vector<std::uint64_t> keys(noise.size(), 0);
    return run_impl(keys, noise);
  }

 private:
  BatchResult run_impl(std::span<const std::uint64_t> keys, std::span<const LevelNoise> explicit_noise) const {
    const std::size_t K = keys.size();
    if (K == 0) throw InvalidArgument("BatchSimulator: empty batch");
    const bool use_explicit = !explicit_noise.empty();
    const double h = grid_.dt;
    const std::size_t N = grid_.steps;
    const bool two_level = model_ == Model::two_level;

    detail::Rk4Coefficients c{};
    c.half_omega = two_level ? 0.0 : 0.5 * p_.omega;
    c.delta = two_level ? 0.0 : p_.delta;
    c.half_gamma = 0.5 * p_.gamma;
    c.g0 = p_.g0;
    c.half_kappa = 0.5 * p_.kappa;
    c.delta_c = two_level ? 0.0 : p_.delta_c;
    const double amp = std::sqrt(p_.kappa_wg);

    bool has_level[3] = {false, false, false};
    for (const auto& ch : channels_)
      if (ch.sigma > 0.0) has_level[static_cast<int>(ch.target)] = true;
    if (use_explicit) {
      for (const auto& ln : explicit_noise) {
        has_level[0] = has_level[0] || !ln.e.empty();
        has_level[1] = has_level[1] || !ln.r.empty();
        has_level[2] = has_level[2] || !ln.g.empty();
        for (const auto* v : {&ln.e, &ln.r, &ln.g})
          if (!v->empty() && v->size() != N) throw InvalidArgument("explicit noise length must equal the step count");
      }
    }

    // Lane state.
    // The kernel works on whole vectors; padding lanes run noise-free and are ignored.
    const std::size_t KP = (K + detail::kLaneWidth - 1) / detail::kLaneWidth * detail::kLaneWidth;
    std::vector<double> er(KP, two_level ? 0.0 : 1.0), ei(KP, 0.0), rr(KP, two_level ? 1.0 : 0.0), ri(KP, 0.0),
        gr(KP, 0.0), gi(KP, 0.0), int_r(KP, 0.0), int_g(KP, 0.0), ar(K, 0.0), ai(K, 0.0), balance(K, 0.0);
    std::vector<double> gre(K * K, 0.0), gim(K * K, 0.0);

    const bool filtered = opts_.filter.has_value();
    OnePoleFilter filt;
    std::vector<double> fr, fi, fgre, fgim;
    if (filtered) {
      filt = OnePoleFilter(*opts_.filter, h);
      fr.assign(K, 0.0);
      fi.assign(K, 0.0);
      fgre.assign(K * K, 0.0);
      fgim.assign(K * K, 0.0);
    }
    const double dec_r = filt.decay().real(), dec_i = filt.decay().imag();
    const double feed_r = filt.feed().real(), feed_i = filt.feed().imag();

    // Noise sources.
    struct LaneChannel {
      OuStepper ou;
      Rng rng;
      double x = 0.0;
      int level = 1;
    };
    std::vector<std::vector<LaneChannel>> lane_channels(K);
    if (!use_explicit) {
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t ci = 0; ci < channels_.size(); ++ci) {
          const auto& ch = channels_[ci];
          if (ch.sigma == 0.0) continue;
          LaneChannel lc{OuStepper(ch, h), Rng(channel_stream(keys[k], ci)), 0.0, static_cast<int>(ch.target)};
          lane_channels[k].push_back(lc);
        }
    }
    const std::size_t M = std::min(opts_.block, N);
    std::vector<double> nbuf[3];
    for (int l = 0; l < 3; ++l)
      if (has_level[l]) nbuf[l].assign(M * KP, 0.0);

    BatchResult res;
    res.lanes = K;
    res.grid = grid_;
    const std::size_t nb = opts_.n_bins;
    const std::size_t bin_stride = nb >= 2 ? N / (nb - 1) : 0;
    if (nb >= 2) {
      res.binned.assign(K, std::vector<cplx>(nb));
      if (filtered) res.binned_filtered.assign(K, std::vector<cplx>(nb));
    }
    if (opts_.record) {
      res.trajectories.resize(K);
      for (std::size_t k = 0; k < K; ++k) {
        auto& t = res.trajectories[k];
        t.dt = h * static_cast<double>(opts_.record_stride);
        t.seed = keys[k];
        const std::size_t n_rec = N / opts_.record_stride + 1;
        t.e.reserve(n_rec);
        t.r.reserve(n_rec);
        t.g.reserve(n_rec);
        t.alpha.reserve(n_rec);
        t.e.emplace_back(er[k], ei[k]);
        t.r.emplace_back(rr[k], ri[k]);
        t.g.emplace_back(gr[k], gi[k]);
        t.alpha.emplace_back(0.0, 0.0);
      }
    }

    const detail::LaneState lanes{er.data(), ei.data(), rr.data(), ri.data(), gr.data(), gi.data(), int_r.data(),
                                  int_g.data()};
    const detail::Rk4Kernel kernel = detail::select_kernel(has_level[0], has_level[1], has_level[2]);
    double max_norm = 0.0;
    std::size_t n = 0;  // steps completed
    while (n < N) {
      const std::size_t m_count = std::min(M, N - n);
      // Fill noise for this block.
      for (int l = 0; l < 3; ++l)
        if (has_level[l]) std::fill(nbuf[l].begin(), nbuf[l].begin() + static_cast<std::ptrdiff_t>(m_count * KP), 0.0);
      if (use_explicit) {
        for (std::size_t k = 0; k < K; ++k) {
          const std::vector<double>* src[3] = {&explicit_noise[k].e, &explicit_noise[k].r, &explicit_noise[k].g};
          for (int l = 0; l < 3; ++l)
            if (!src[l]->empty())
              for (std::size_t m = 0; m < m_count; ++m) nbuf[l][m * KP + k] = (*src[l])[n + m];
        }
      } else {
        for (std::size_t k = 0; k < K; ++k)
          for (auto& lc : lane_channels[k]) {
            auto& buf = nbuf[lc.level];
            for (std::size_t m = 0; m < m_count; ++m) {
              lc.x = (n + m == 0) ? lc.ou.start(lc.rng) : lc.ou.step(lc.x, lc.rng);
              buf[m * KP + k] += lc.x;
            }
          }
      }

      for (std::size_t m = 0; m < m_count; ++m) {
        const double* de = has_level[0] ? nbuf[0].data() + m * KP : nullptr;
        const double* dr = has_level[1] ? nbuf[1].data() + m * KP : nullptr;
        const double* dg = has_level[2] ? nbuf[2].data() + m * KP : nullptr;
        kernel(c, h, KP, lanes, de, dr, dg);
        if (filtered) {
          for (std::size_t k = 0; k < K; ++k) {
            const double a1r = amp * gr[k], a1i = amp * gi[k];
            const double ur = 0.5 * (ar[k] + a1r), ui = 0.5 * (ai[k] + a1i);
            const double yr = dec_r * fr[k] - dec_i * fi[k] + feed_r * ur - feed_i * ui;
            const double yi = dec_r * fi[k] + dec_i * fr[k] + feed_r * ui + feed_i * ur;
            fr[k] = yr;
            fi[k] = yi;
          }
        }
        for (std::size_t k = 0; k < K; ++k) {
          ar[k] = amp * gr[k];
          ai[k] = amp * gi[k];
        }
        ++n;
        detail::gram_update(K, ar.data(), ai.data(), gre.data(), gim.data(), 1.0);
        if (filtered) detail::gram_update(K, fr.data(), fi.data(), fgre.data(), fgim.data(), 1.0);
        for (std::size_t k = 0; k < K; ++k) {
          const double norm = er[k] * er[k] + ei[k] * ei[k] + rr[k] * rr[k] + ri[k] * ri[k] + gr[k] * gr[k] +
                              gi[k] * gi[k];
          max_norm = std::max(max_norm, norm);
          const double bal = std::abs(norm + p_.gamma * int_r[k] + p_.kappa * int_g[k] - 1.0);
          balance[k] = std::max(balance[k], bal);
        }
        if (nb >= 2 && n % bin_stride == 0) {
          const std::size_t b = n / bin_stride;
          for (std::size_t k = 0; k < K; ++k) {
            res.binned[k][b] = cplx(ar[k], ai[k]);
            if (filtered) res.binned_filtered[k][b] = cplx(fr[k], fi[k]);
          }
        }
        if (opts_.record && n % opts_.record_stride == 0) {
          for (std::size_t k = 0; k < K; ++k) {
            auto& t = res.trajectories[k];
            t.e.emplace_back(er[k], ei[k]);
            t.r.emplace_back(rr[k], ri[k]);
            t.g.emplace_back(gr[k], gi[k]);
            t.alpha.emplace_back(ar[k], ai[k]);
          }
        }
      }
      if (opts_.record) {
        for (std::size_t k = 0; k < K; ++k) {
          auto& t = res.trajectories[k];
          // Midpoint shift of the step that starts at each recorded node.
          for (std::size_t m = 0; m < m_count; ++m) {
            const std::size_t step = n - m_count + m;
            if (step % opts_.record_stride != 0) continue;
            t.noise_e.push_back(has_level[0] ? nbuf[0][m * KP + k] : 0.0);
            t.noise_r.push_back(has_level[1] ? nbuf[1][m * KP + k] : 0.0);
            t.noise_g.push_back(has_level[2] ? nbuf[2][m * KP + k] : 0.0);
          }
        }
      }
      if (max_norm > 1.0 + 1e-3)
        throw IntegrationError("amplitude norm grew to " + std::to_string(max_norm) + " at t = " +
                               std::to_string(static_cast<double>(n) * h) + "; reduce dt (currently " +
                               std::to_string(h) + ")");
    }

    // Trapezoid: the node at t = 0 carries zero envelope; the last node gets half weight.
    detail::gram_update(K, ar.data(), ai.data(), gre.data(), gim.data(), -0.5);
    res.gram = detail::gram_finish(K, gre, gim, h);
    res.efficiency.resize(K);
    for (std::size_t k = 0; k < K; ++k) res.efficiency[k] = res.gram[k * K + k].real();
    if (filtered) {
      detail::gram_update(K, fr.data(), fi.data(), fgre.data(), fgim.data(), -0.5);
      // Free ring-down after t_max: integral of exp(-Gamma t) is 1/Gamma.
      detail::gram_update(K, fr.data(), fi.data(), fgre.data(), fgim.data(), 1.0 / (filt.width() * h));
      res.gram_filtered = detail::gram_finish(K, fgre, fgim, h);
      res.efficiency_filtered.resize(K);
      for (std::size_t k = 0; k < K; ++k) res.efficiency_filtered[k] = res.gram_filtered[k * K + k].real();
    }
    res.balance_residual = balance;
    if (opts_.record) {
      for (std::size_t k = 0; k < K; ++k) {
        auto& t = res.trajectories[k];
        for (auto* v : {&t.noise_e, &t.noise_r, &t.noise_g}) v->push_back(0.0);
        t.efficiency = res.efficiency[k];
        t.balance_residual = balance[k];
      }
    }
    return res;
  }

  SystemParams p_;
  std::vector<NoiseChannel> channels_;
  Model model_;
  Grid grid_;
  BatchOptions opts_;
};

struct SimulateOptions {
  std::size_t record_stride = 1;
  StepRule rule{};
};

inline Trajectory simulate_stochastic(const SystemParams& params, std::span<const NoiseChannel> channels,
                                      std::uint64_t seed, SimulateOptions opts = {}) {
  const Grid grid = resolve_grid(params, channels, Model::three_level, 1, opts.rule);
  BatchOptions bo;
  bo.record = true;
  bo.record_stride = opts.record_stride;
  BatchSimulator sim(params, {channels.begin(), channels.end()}, Model::three_level, grid, bo);
  const std::uint64_t keys[1] = {seed};
  return std::move(sim.run(keys).trajectories.front());
}

inline Trajectory simulate_deterministic(const SystemParams& params, SimulateOptions opts = {}) {
  return simulate_stochastic(params, {}, 0, opts);
}

inline Trajectory simulate_two_level(const SystemParams& params, const NoiseChannel& channel, std::uint64_t seed,
                                     SimulateOptions opts = {}) {
  const NoiseChannel chans[1] = {channel};
  const Grid grid = resolve_grid(params, chans, Model::two_level, 1, opts.rule);
  BatchOptions bo;
  bo.record = true;
  bo.record_stride = opts.record_stride;
  BatchSimulator sim(params, {channel}, Model::two_level, grid, bo);
  const std::uint64_t keys[1] = {seed};
  return std::move(sim.run(keys).trajectories.front());
}

// Integrates with a caller-supplied noise realization (midpoint samples).
inline Trajectory simulate_with_noise(const SystemParams& params, Model model, const Grid& grid, LevelNoise noise,
                                      std::size_t record_stride = 1) {
  BatchOptions bo;
  bo.record = true;
  bo.record_stride = record_stride;
  BatchSimulator sim(params, {}, model, grid, bo);
  const LevelNoise ln[1] = {std::move(noise)};
  return std::move(sim.run_with_noise(ln).trajectories.front());
}

// Closed-form adiabatic amplitudes for the step drive on a uniform grid.
inline Trajectory adiabatic_solution(const SystemParams& params, double dt, std::size_t points) {
  params.validate();
  if (params.delta == 0.0) throw InvalidArgument("adiabatic_solution: undefined on resonance (delta = 0)");
  const DerivedRates d = derive_rates(params);
  Trajectory t;
  t.dt = dt;
  const cplx rate = kI * params.omega * params.omega / (4.0 * d.delta_prime);
  const cplx r_over_e = -params.omega / (2.0 * d.delta_prime);
  const cplx g_over_r = -2.0 * kI * params.g0 / params.kappa;
  const double amp = std::sqrt(params.kappa_wg);
  for (std::size_t k = 0; k < points; ++k) {
    const double tk = static_cast<double>(k) * dt;
    const cplx e = std::exp(rate * tk);
    const cplx r = r_over_e * e;
    const cplx g = g_over_r * r;
    t.e.push_back(e);
    t.r.push_back(r);
    t.g.push_back(g);
    t.alpha.push_back(amp * g);
  }
  t.efficiency = overlap(t.alpha, t.alpha, dt).real();
  return t;
}

// Value of the adiabatic solution at a single time; before turn-on only e is populated.
inline std::array<cplx, 3> adiabatic_amplitudes(const SystemParams& params, double t) {
  if (params.delta == 0.0) throw InvalidArgument("adiabatic_solution: undefined on resonance (delta = 0)");
  if (t < 0.0) return {cplx(1.0, 0.0), cplx{}, cplx{}};
  const DerivedRates d = derive_rates(params);
  const cplx e = std::exp(kI * params.omega * params.omega * t / (4.0 * d.delta_prime));
  const cplx r = -params.omega / (2.0 * d.delta_prime) * e;
  return {e, r, -2.0 * kI * params.g0 / params.kappa * r};
}

}  // namespace raman
