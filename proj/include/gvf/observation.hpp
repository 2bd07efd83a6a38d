#ifndef GVF_OBSERVATION_HPP
#define GVF_OBSERVATION_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gvf/spectral_field.hpp"

namespace gvf {

// Finite-dimensional observation functionals A_1..A_n applied to the signal.
// The canonical choice is point evaluation at z_j in (0, 1), which in the
// sine basis has coefficients a_{j,k} = sqrt(2) sin(k pi z_j).  Generalized
// (non-point) functionals can be supplied directly as a coefficient matrix;
// this includes the degenerate all-zero functional used by diagnostics.
class ObservationModel {
 public:
  static ObservationModel from_points(const std::vector<double>& points, int n_modes) {
    if (points.empty()) throw std::invalid_argument("ObservationModel: need at least one point");
    if (n_modes < 1) throw std::invalid_argument("ObservationModel: need at least one mode");
    for (double z : points) {
      if (!(z > 0.0) || !(z < 1.0)) {
        throw std::invalid_argument("ObservationModel: points must lie in (0, 1)");
      }
    }
    Eigen::MatrixXd coeff(points.size(), n_modes);
    for (std::size_t j = 0; j < points.size(); ++j) {
      for (int k = 1; k <= n_modes; ++k) coeff(j, k - 1) = basis_value(k, points[j]);
    }
    return ObservationModel(std::move(coeff), points);
  }

  // Functionals given by their basis coefficients, one row per channel.
  static ObservationModel from_coefficients(Eigen::MatrixXd coeff, std::vector<double> labels = {}) {
    if (coeff.rows() < 1 || coeff.cols() < 1) {
      throw std::invalid_argument("ObservationModel: empty coefficient matrix");
    }
    return ObservationModel(std::move(coeff), std::move(labels));
  }

  int channels() const { return static_cast<int>(coeff_.rows()); }
  int n_modes() const { return static_cast<int>(coeff_.cols()); }
  const Eigen::MatrixXd& coefficients() const { return coeff_; }
  const std::vector<double>& points() const { return points_; }

  // True when two observation channels evaluate at the same location.  Legal,
  // but worth a warning: the channels then carry identical signal content.
  bool has_coincident_points() const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      for (std::size_t j = i + 1; j < points_.size(); ++j) {
        if (points_[i] == points_[j]) return true;
      }
    }
    return false;
  }

  // A_j applied to a field with raw coefficient storage.
  double apply(int j, const double* field_coeffs) const {
    double acc = 0.0;
    for (int k = 0; k < n_modes(); ++k) acc += coeff_(j, k) * field_coeffs[k];
    return acc;
  }

  double apply(int j, const SpectralField& field) const {
    if (field.n_modes() != n_modes()) {
      throw std::invalid_argument("ObservationModel::apply: mode count mismatch");
    }
    return apply(j, field.coeffs.data());
  }

 private:
  ObservationModel(Eigen::MatrixXd coeff, std::vector<double> points)
      : coeff_(std::move(coeff)), points_(std::move(points)) {}

  Eigen::MatrixXd coeff_;       // channels x modes
  std::vector<double> points_;  // empty for generalized functionals
};

}  // namespace gvf

#endif
