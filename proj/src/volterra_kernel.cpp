#include "gvf/volterra_kernel.hpp"

#include <cmath>

#include "gvf/quadrature.hpp"

namespace gvf {

double fbm_normalization(double hurst) {
  if (!(hurst > 0.5) || !(hurst < 1.0)) {
    throw std::invalid_argument("fbm_normalization: hurst must lie in (1/2, 1)");
  }
  // B(2 - 2h, h - 1/2) through log-gammas; every argument is positive here.
  const double log_beta =
      std::lgamma(2.0 - 2.0 * hurst) + std::lgamma(hurst - 0.5) - std::lgamma(1.5 - hurst);
  return std::sqrt(hurst * (2.0 * hurst - 1.0) / std::exp(log_beta));
}

double VolterraKernel::evaluate(double t, double s) const {
  if (s < 0.0 || t < s) throw std::domain_error("VolterraKernel: need 0 <= s <= t");
  if (kind_ == KernelKind::kBrownian) {
    // Indicator kernel of the Wiener process; the origin carries no mass.
    return (t == 0.0 && s == 0.0) ? 0.0 : 1.0;
  }
  if (s == 0.0) throw std::domain_error("VolterraKernel: fractional kernel undefined at s = 0");
  if (t == s) return 0.0;

  // K(t, s) = c_h int_s^t (u / s)^{h - 1/2} (u - s)^{h - 3/2} du.  The
  // substitution u = s + v^{1/a} with a = h - 1/2 absorbs the endpoint
  // singularity:  K = (c_h / a) int_0^{(t - s)^a} (1 + v^{1/a} / s)^a dv,
  // whose integrand is smooth on the closed interval.
  const double a = hurst_ - 0.5;
  const double upper = std::pow(t - s, a);
  const double inv_a = 1.0 / a;
  const auto integrand = [&](double v) { return std::pow(1.0 + std::pow(v, inv_a) / s, a); };
  const double integral = adaptive_simpson(integrand, 0.0, upper, 1e-14, 1e-11);
  return fbm_normalization(hurst_) * inv_a * integral;
}

double phi_h(double hurst, double lambda, double r) {
  if (!(hurst > 0.5) || !(hurst < 1.0)) {
    throw std::invalid_argument("phi_h: hurst must lie in (1/2, 1)");
  }
  if (lambda == r) throw std::domain_error("phi_h: singular on the diagonal lambda == r");
  return hurst * (2.0 * hurst - 1.0) * std::pow(std::abs(lambda - r), 2.0 * hurst - 2.0);
}

double phi_h_box_integral(double hurst, double a1, double b1, double a2, double b2) {
  if (!(hurst > 0.5) || !(hurst < 1.0)) {
    throw std::invalid_argument("phi_h_box_integral: hurst must lie in (1/2, 1)");
  }
  if (b1 < a1 || b2 < a2) throw std::invalid_argument("phi_h_box_integral: empty box");
  const double p = 2.0 * hurst;
  const auto psi = [p](double x) { return 0.5 * std::pow(std::abs(x), p); };
  return psi(b1 - a2) + psi(a1 - b2) - psi(b1 - b2) - psi(a1 - a2);
}

double scalar_covariance(const VolterraKernel& kernel, double s, double t, int mesh_cells) {
  if (s < 0.0 || t < 0.0) throw std::domain_error("scalar_covariance: times must be nonnegative");
  if (mesh_cells < 1) throw std::invalid_argument("scalar_covariance: mesh_cells must be >= 1");
  const double lo = std::min(s, t);
  const double hi = std::max(s, t);
  if (lo == 0.0) return 0.0;
  if (kernel.kind() == KernelKind::kBrownian) return lo;

  // Graded mesh r_m = lo * (m / M)^2.  The integrand K(s, r) K(t, r) blows up
  // like r^{1 - 2h} at the origin, too hard for a bare midpoint rule when h
  // is close to 1.  Each cell therefore integrates the singular power
  // r^{1 - 2h} exactly and samples only the smooth remainder
  // g(r) = r^{2h - 1} K(s, r) K(t, r) at the cell's weighted centroid.
  const int M = mesh_cells;
  const double q = 2.0 * kernel.hurst() - 1.0;  // integrand ~ r^{-q} near 0
  double acc = 0.0;
  double prev_w = 0.0;  // r^{1-q} / (1-q) at the left cell edge
  double prev_c = 0.0;  // r^{2-q} / (2-q) at the left cell edge
  for (int m = 1; m <= M; ++m) {
    const double frac = static_cast<double>(m) / M;
    const double next = lo * frac * frac;
    const double next_w = std::pow(next, 1.0 - q) / (1.0 - q);
    const double next_c = std::pow(next, 2.0 - q) / (2.0 - q);
    const double weight = next_w - prev_w;          // int_cell r^{-q} dr
    const double centroid = (next_c - prev_c) / weight;
    acc += std::pow(centroid, q) * kernel.evaluate(hi, centroid) *
           kernel.evaluate(lo, centroid) * weight;
    prev_w = next_w;
    prev_c = next_c;
  }
  return acc;
}

}  // namespace gvf
