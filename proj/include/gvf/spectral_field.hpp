#ifndef GVF_SPECTRAL_FIELD_HPP
#define GVF_SPECTRAL_FIELD_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace gvf {

// Dirichlet eigenbasis of -d^2/dx^2 on (0, 1): e_k(x) = sqrt(2) sin(k pi x)
// with eigenvalue (k pi)^2.  Mode indices are 1-based throughout.

inline double laplacian_eigenvalue(int k) {
  if (k < 1) throw std::invalid_argument("laplacian_eigenvalue: mode index is 1-based");
  return (k * M_PI) * (k * M_PI);
}

inline double basis_value(int k, double z) {
  if (k < 1) throw std::invalid_argument("basis_value: mode index is 1-based");
  return M_SQRT2 * std::sin(k * M_PI * z);
}

// A field on (0, 1) represented by its first n coefficients in the Dirichlet
// sine basis.
struct SpectralField {
  Eigen::VectorXd coeffs;

  SpectralField() = default;
  explicit SpectralField(Eigen::VectorXd c) : coeffs(std::move(c)) {}
  explicit SpectralField(int n_modes) : coeffs(Eigen::VectorXd::Zero(n_modes)) {}

  int n_modes() const { return static_cast<int>(coeffs.size()); }

  // Pointwise value sum_k coeffs_k e_k(z).  Defined on the open interval
  // only; the Dirichlet boundary is not an admissible evaluation point.
  double evaluate_at(double z) const {
    if (!(z > 0.0) || !(z < 1.0)) {
      throw std::domain_error("SpectralField::evaluate_at: z must lie in (0, 1)");
    }
    double acc = 0.0;
    for (int k = 1; k <= n_modes(); ++k) acc += coeffs[k - 1] * basis_value(k, z);
    return acc;
  }
};

inline double evaluate_at(const SpectralField& field, double z) { return field.evaluate_at(z); }

}  // namespace gvf

#endif
