#pragma once

#include <complex>
#include <cstdint>
#include <ostream>
#include <vector>

namespace raman {

using cplx = std::complex<double>;

// Amplitudes on a uniform grid t_k = k * dt starting at the drive turn-on.
struct Trajectory {
  double dt = 0.0;
  std::vector<cplx> e, r, g;
  std::vector<cplx> alpha;  // photon envelope sqrt(kappa_wg) * g
  // Energy shift applied during the step that starts at each node.
  std::vector<double> noise_e, noise_r, noise_g;
  double efficiency = 0.0;
  double balance_residual = 0.0;  // max |norm + emitted - 1| over the run
  std::uint64_t seed = 0;
  bool filtered = false;

  std::size_t size() const { return alpha.size(); }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  double t_end() const { return alpha.empty() ? 0.0 : time(alpha.size() - 1); }

  void write_csv(std::ostream& os) const {
    os << "t,e_re,e_im,r_re,r_im,g_re,g_im,alpha_re,alpha_im,noise_e,noise_r,noise_g\n";
    os.precision(17);
    auto at = [](const std::vector<cplx>& v, std::size_t k) { return k < v.size() ? v[k] : cplx{}; };
    auto atd = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; };
    for (std::size_t k = 0; k < size(); ++k) {
      const cplx e0 = at(e, k), r0 = at(r, k), g0 = at(g, k), a0 = alpha[k];
      os << time(k) << ',' << e0.real() << ',' << e0.imag() << ',' << r0.real() << ',' << r0.imag() << ','
         << g0.real() << ',' << g0.imag() << ',' << a0.real() << ',' << a0.imag() << ',' << atd(noise_e, k) << ','
         << atd(noise_r, k) << ',' << atd(noise_g, k) << '\n';
    }
  }
};

// Trapezoid overlap of two envelopes on a shared uniform grid.
inline cplx overlap(const std::vector<cplx>& a, const std::vector<cplx>& b, double dt) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return {};
  cplx s{};
  for (std::size_t k = 1; k + 1 < n; ++k) s += a[k] * std::conj(b[k]);
  s += 0.5 * (a[0] * std::conj(b[0]) + a[n - 1] * std::conj(b[n - 1]));
  return s * dt;
}

}  // namespace raman
