#ifndef GVF_VOLTERRA_KERNEL_HPP
#define GVF_VOLTERRA_KERNEL_HPP

#include <stdexcept>

namespace gvf {

enum class KernelKind { kBrownian, kFractionalBrownian };

// Square-integrable Volterra kernel K(t, s) driving the scalar noise
// processes b_t = int_0^t K(t, s) dW_s.  Two kinds are supported:
//
//  - Brownian:    K = 1 on {s <= t}, so b is a standard Wiener process.
//  - Fractional:  the fractional Brownian motion kernel for Hurst index
//                 h in (1/2, 1), normalized so that Var b_t = t^{2h}.
//
// The fractional kernel blows up like s^{1/2-h} as s -> 0 and vanishes on
// the diagonal; evaluation at s = 0 is rejected for it.
class VolterraKernel {
 public:
  static VolterraKernel brownian() { return VolterraKernel(KernelKind::kBrownian, 0.0); }

  static VolterraKernel fractional(double hurst) {
    if (!(hurst > 0.5) || !(hurst < 1.0)) {
      throw std::invalid_argument("VolterraKernel: hurst must lie in (1/2, 1)");
    }
    return VolterraKernel(KernelKind::kFractionalBrownian, hurst);
  }

  KernelKind kind() const { return kind_; }
  double hurst() const { return hurst_; }

  // Regularity exponent of the kernel: h - 1/2 for the fractional kernel and
  // 1/2 by convention for the Brownian one.
  double alpha() const {
    return kind_ == KernelKind::kBrownian ? 0.5 : hurst_ - 0.5;
  }

  // K(t, s) for 0 <= s <= t.  Fractional kind requires s > 0.
  double evaluate(double t, double s) const;

 private:
  VolterraKernel(KernelKind kind, double hurst) : kind_(kind), hurst_(hurst) {}

  KernelKind kind_;
  double hurst_;
};

// Normalization constant of the fractional kernel, chosen so that the
// induced process has variance t^{2h}:
//   c_h = sqrt( h (2h - 1) / B(2 - 2h, h - 1/2) ).
double fbm_normalization(double hurst);

// Second-moment density of fractional Brownian motion for h > 1/2,
//   phi_h(lambda, r) = h (2h - 1) |lambda - r|^{2h - 2}.
// Singular on the diagonal: lambda == r is rejected.
double phi_h(double hurst, double lambda, double r);

// Exact integral of phi_h over the rectangle [a1, b1] x [a2, b2], obtained
// from the second antiderivative |x|^{2h} / 2 of the difference variable.
// This is what makes diagonal cells of double quadratures tractable.
double phi_h_box_integral(double hurst, double a1, double b1, double a2, double b2);

// Covariance R(s, t) = int_0^{s /\ t} K(s, r) K(t, r) dr of the scalar
// Volterra process.  The Brownian kind returns s /\ t exactly, bypassing
// quadrature.  The fractional kind integrates on a quadratically graded mesh
// r_m = (s /\ t) (m / M)^2 that concentrates cells near the r = 0 blow-up.
double scalar_covariance(const VolterraKernel& kernel, double s, double t, int mesh_cells = 512);

}  // namespace gvf

#endif
