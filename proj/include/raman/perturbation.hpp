#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "raman/error.hpp"
#include "raman/hom.hpp"
#include "raman/model.hpp"
#include "raman/noise.hpp"

namespace raman {

// Phase errors phi_x defined by x_noisy = x exp(-i phi_x), on nodes t_k = k dt.
struct PhasePath {
  double dt = 0.0;
  std::vector<cplx> phi_e, phi_r, phi_g, delta_bar;

  std::size_t size() const { return phi_g.size(); }
};

// Large-kappa linear response of the phases to an excited-state shift.
// noise.values[k] is held across step k, so the result has values.size() + 1
// nodes. delta_bar and its integral are propagated exactly per step.
inline PhasePath linearized_phase_path(const SystemParams& p, const NoisePath& noise) {
  if (p.delta == 0.0) throw InvalidArgument("linearized_phase_path: delta must be nonzero");
  if (!(noise.dt > 0.0)) throw InvalidArgument("linearized_phase_path: noise needs a uniform grid");
  const DerivedRates d = derive_rates(p);
  const cplx dp = d.delta_prime;
  const double h = noise.dt;
  const cplx decay = std::exp(-kI * dp * h);
  const cplx one_minus = 1.0 - decay;
  const cplx pref = p.omega * p.omega / (4.0 * dp * dp);
  const std::size_t n = noise.values.size();
  PhasePath out;
  out.dt = h;
  out.phi_e.resize(n + 1);
  out.phi_r.resize(n + 1);
  out.phi_g.resize(n + 1);
  out.delta_bar.resize(n + 1);
  cplx db{}, integral{};
  out.delta_bar[0] = db;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = noise.values[k];
    integral += x * h + (db - x) * one_minus / (kI * dp);
    db = decay * db + one_minus * x;
    out.delta_bar[k + 1] = db;
    out.phi_e[k + 1] = pref * integral;
  }
  for (std::size_t k = 0; k <= n; ++k) out.phi_g[k] = out.phi_r[k] = out.phi_e[k] + out.delta_bar[k] / (kI * dp);
  return out;
}

struct SmallPhiResult {
  double F = 1.0;
  double F_stderr = 0.0;
  std::size_t count = 0;
};

// Second-order expansion of the overlap in phi_g for the envelope e^{-xi t/2}:
// F = 1 + 2 xi^2 <|A|^2> - 2 xi <B>, A = int e^{-xi t} phi_g, B = int e^{-xi t} |phi_g|^2,
// by trapezoid on each path's grid. This is one path's term inside <...>.
inline double smallphi_contribution(const PhasePath& pp, double xi) {
  const std::size_t m = pp.size();
  cplx A{};
  double B = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double w = ((k == 0 || k + 1 == m) ? 0.5 : 1.0) * pp.dt * std::exp(-xi * pp.dt * static_cast<double>(k));
    A += w * pp.phi_g[k];
    B += w * std::norm(pp.phi_g[k]);
  }
  return 2.0 * xi * xi * std::norm(A) - 2.0 * xi * B;
}

inline SmallPhiResult smallphi_from_contributions(std::span<const double> contrib) {
  if (contrib.empty()) throw EstimationError("indist_smallphi: no phase paths");
  SmallPhiResult res;
  res.count = contrib.size();
  double s = 0.0, s2 = 0.0;
  for (double c : contrib) {
    s += c;
    s2 += c * c;
  }
  res.F = 1.0 + s / static_cast<double>(res.count);
  res.F_stderr = detail::sample_stderr(s, s2, static_cast<double>(res.count));
  return res;
}

inline SmallPhiResult indist_smallphi(std::span<const PhasePath> paths, double xi) {
  if (!(xi > 0.0)) throw InvalidArgument("indist_smallphi: xi must be positive");
  std::vector<double> contrib;
  contrib.reserve(paths.size());
  for (const auto& pp : paths) contrib.push_back(smallphi_contribution(pp, xi));
  return smallphi_from_contributions(contrib);
}

// Quasi-static amplitude ratios at constant drive: r and g are solved with
// the e equation's evolution neglected.
struct AmplitudeRatios {
  cplx r_over_e;
  cplx g_over_r;
};

inline AmplitudeRatios quasi_static_ratios(const SystemParams& p) {
  const cplx cav = cplx(0.5 * p.kappa, p.delta_c);
  const cplx g_over_r = -kI * p.g0 / cav;
  const cplx denom = -cplx(0.5 * p.gamma, p.delta) - p.g0 * p.g0 / cav;
  return {kI * (0.5 * p.omega) / denom, g_over_r};
}

inline AmplitudeRatios large_kappa_ratios(const SystemParams& p) {
  const DerivedRates d = derive_rates(p);
  return {-p.omega / (2.0 * d.delta_prime), -2.0 * kI * p.g0 / p.kappa};
}

using Matrix3c = Eigen::Matrix<cplx, 3, 3>;

// Linearized phase dynamics d(phi)/dt - delta = M phi: off-diagonal
// M_ij = M0_ij x_j / x_i and each row sums to zero.
inline Matrix3c linearization_matrix(const SystemParams& p, const AmplitudeRatios& q) {
  const cplx a = -kI * (0.5 * p.omega);  // e <- r and r <- e coupling
  const cplx b = -kI * p.g0;             // r <- g and g <- r coupling
  Matrix3c M = Matrix3c::Zero();
  M(0, 1) = a * q.r_over_e;
  M(1, 0) = a / q.r_over_e;
  M(1, 2) = b * q.g_over_r;
  M(2, 1) = b / q.g_over_r;
  for (int i = 0; i < 3; ++i) {
    cplx s{};
    for (int j = 0; j < 3; ++j)
      if (j != i) s += M(i, j);
    M(i, i) = -s;
  }
  return M;
}

// Transfer of excited-state noise into the photon phase,
// H(w, eta) = |([M + (i w - eta/2) I]^{-1})_{32}|^2.
class TransferFunction {
 public:
  enum class Method { generic, three_pole };

  explicit TransferFunction(SystemParams p, Method method = Method::generic)
      : p_(std::move(p)), method_(method), ratios_(quasi_static_ratios(p_)) {
    p_.validate();
    if (p_.delta == 0.0 || p_.omega == 0.0 || p_.g0 == 0.0)
      throw InvalidArgument("TransferFunction: needs nonzero delta, omega and g0");
    M_ = linearization_matrix(p_, ratios_);
    rates_ = derive_rates(p_);
  }

  const Matrix3c& matrix() const { return M_; }
  const AmplitudeRatios& ratios() const { return ratios_; }
  Method method() const { return method_; }
  const SystemParams& params() const { return p_; }

  // Complex frequencies where [M + (i w - eta/2) I] is singular.
  std::vector<cplx> poles(double eta) const {
    Eigen::ComplexEigenSolver<Matrix3c> es(M_);
    std::vector<cplx> out;
    for (int i = 0; i < 3; ++i) out.push_back(kI * (es.eigenvalues()[i] - 0.5 * eta));
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    return out;
  }

  double operator()(double omega, double eta) const {
    return method_ == Method::generic ? generic(omega, eta) : three_pole(omega, eta);
  }

  double generic(double omega, double eta) const {
    Matrix3c A = M_;
    const cplx shift(-0.5 * eta, omega);
    for (int i = 0; i < 3; ++i) A(i, i) += shift;
    const cplx det = A.determinant();
    const double scale = A.cwiseAbs().maxCoeff();
    if (!(std::abs(det) > 1e-14 * scale * scale * scale)) {
      std::string where;
      for (cplx w : poles(eta)) where += " (" + std::to_string(w.real()) + ", " + std::to_string(w.imag()) + ")";
      throw EstimationError("transfer_H: singular at omega = " + std::to_string(omega) + ", eta = " +
                            std::to_string(eta) + "; poles at" + where);
    }
    // (A^{-1})_{32} from the cofactor of element (2, 3).
    const cplx inv32 = -(A(0, 0) * A(2, 1) - A(0, 1) * A(2, 0)) / det;
    return std::norm(inv32);
  }

  // Raman, spontaneous-emission and cavity poles without their cross-terms'
  // corrections to the residues.
  double three_pole(double omega, double eta) const {
    const double xi = rates_.xi.value_or(0.0);
    const double k = p_.kappa, D = p_.delta;
    const cplx iw(0.0, omega);
    const cplx c = kI * k / cplx(2.0 * D, k);
    const cplx v = xi / (rates_.gamma_p * (iw - 0.5 * eta)) + c / (iw - kI * D - 0.5 * rates_.gamma_eff) -
                   c / (iw - 0.5 * k);
    return std::norm(v);
  }

 private:
  SystemParams p_;
  Method method_;
  AmplitudeRatios ratios_;
  Matrix3c M_;
  DerivedRates rates_;
};

inline double transfer_H(const SystemParams& p, double omega, double eta) {
  return TransferFunction(p).generic(omega, eta);
}

// Exponentially weighted PSD of the OU correlation sigma^2 e^{-beta|tau|}.
inline double noise_psd(const NoiseChannel& c, double omega, double eta) {
  if (c.sigma == 0.0) return 0.0;
  if (!(c.beta > 0.0)) throw InvalidArgument("noise_psd: beta must be positive");
  if (eta < 0.0) throw InvalidArgument("noise_psd: eta must be nonnegative");
  const double a = 0.5 * eta + c.beta;
  return c.sigma * c.sigma * (eta + 2.0 * c.beta) / (omega * omega + a * a);
}

using PsdFunction = std::function<double(double omega, double eta)>;

struct FreqDomainOptions {
  TransferFunction::Method method = TransferFunction::Method::generic;
  double abs_tol = -1.0;  // < 0: 1e-6 sigma^2 / gamma_p^2 (or 1e-12 with no sigma)
  unsigned max_depth = 20;
};

struct FreqDomainResult {
  double F = 1.0;
  double static_term = 0.0;    // xi H(0, 2 xi) S(0, 2 xi)
  double spectral_term = 0.0;  // 2 int dw/2pi H(w, xi) S(w, xi)
  double window = 0.0;         // half-width of the finite quadrature window
  double tail = 0.0;           // contribution from |w| > window
  double tail_bound = 0.0;     // analytic bound on that contribution
  double error = 0.0;          // quadrature error estimate
  double one_minus_F() const { return 1.0 - F; }
};

// F = 1 + xi H(0, 2xi) S(0, 2xi) - 2 int dw/2pi H(w, xi) S(w, xi). The finite
// window is split at every pole and noise feature; the two tails are
// integrated too and checked against H_max S's 1/w^2 bound.
inline FreqDomainResult indist_freq_domain(const SystemParams& p, const PsdFunction& psd, double psd_rate,
                                           double sigma_scale, FreqDomainOptions opts = {}) {
  TransferFunction H(p, opts.method);
  const DerivedRates d = derive_rates(p);
  if (!d.xi || !(*d.xi > 0.0)) throw InvalidArgument("indist_freq_domain: xi must be positive");
  const double xi = *d.xi;
  FreqDomainResult res;
  const double tol = opts.abs_tol >= 0.0 ? opts.abs_tol
                     : sigma_scale > 0.0 ? 1e-6 * sigma_scale * sigma_scale / (d.gamma_p * d.gamma_p)
                                         : 1e-12;
  res.static_term = xi * H(0.0, 2.0 * xi) * psd(0.0, 2.0 * xi);
  auto integrand = [&](double w) { return H(w, xi) * psd(w, xi) / (2.0 * std::numbers::pi); };
  res.window = std::max({10.0 * psd_rate, 4.0 * std::abs(p.delta), 4.0 * p.kappa});

  std::vector<double> cuts{-res.window, 0.0, res.window};
  auto add_feature = [&](double centre, double width) {
    width = std::max(std::abs(width), 1e-12 * res.window);
    for (double m : {0.0, 1.0, 3.0, 10.0, 30.0, 100.0})
      for (double s : {-1.0, 1.0}) {
        const double x = centre + s * m * width;
        if (std::abs(x) < res.window) cuts.push_back(x);
      }
  };
  for (cplx pole : H.poles(xi)) add_feature(pole.real(), pole.imag());
  add_feature(0.0, 0.5 * xi + psd_rate);
  add_feature(p.delta, 0.5 * d.gamma_eff);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double seg_tol = 1e-10;
  double total = 0.0, err_total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    total += GK::integrate(integrand, cuts[i], cuts[i + 1], opts.max_depth, seg_tol, &err);
    err_total += err;
  }
  double tail = 0.0;
  for (auto [a, b] : {std::pair{-std::numeric_limits<double>::infinity(), -res.window},
                      std::pair{res.window, std::numeric_limits<double>::infinity()}}) {
    double err = 0.0;
    tail += GK::integrate(integrand, a, b, opts.max_depth, seg_tol, &err);
    err_total += err;
  }
  // For |w| > W, H decays at least as 1/w^2 and S is bounded by its value at W
  // times (W/w)^2, so each tail is at most H(W) S(W) W / 3 / 2pi.
  const double W = res.window;
  res.tail_bound = 2.0 * std::max(H(W, xi) * psd(W, xi), H(-W, xi) * psd(-W, xi)) * W / 3.0 /
                   (2.0 * std::numbers::pi);
  res.tail = tail;
  res.error = err_total;
  res.spectral_term = 2.0 * (total + tail);
  res.F = 1.0 + res.static_term - res.spectral_term;
  if (!std::isfinite(res.F) || err_total > tol)
    throw EstimationError("indist_freq_domain: quadrature did not converge (error " + std::to_string(err_total) +
                          ", tolerance " + std::to_string(tol) + ")");
  return res;
}

inline FreqDomainResult indist_freq_domain(const SystemParams& p, const NoiseChannel& channel,
                                           FreqDomainOptions opts = {}) {
  channel.validate();
  if (channel.target != Level::r) throw InvalidArgument("indist_freq_domain: only excited-state noise is supported");
  return indist_freq_domain(
      p, [&](double w, double eta) { return noise_psd(channel, w, eta); }, channel.beta, channel.sigma, opts);
}

}  // namespace raman
