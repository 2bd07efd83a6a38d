#ifndef GVF_SIGNAL_MODEL_HPP
#define GVF_SIGNAL_MODEL_HPP

#include <Eigen/Dense>
#include <stdexcept>

#include "gvf/spectral_field.hpp"
#include "gvf/volterra_kernel.hpp"

namespace gvf {

// Spectral Galerkin truncation of the stochastic heat equation
//   d theta = Laplace(theta) dt + G db,   theta_0 = 0,
// on (0, 1) with Dirichlet boundary, driven by independent scalar Volterra
// processes in each basis mode.  G is either diagonal (per-mode gains g_k) or
// a dense mode-coupling matrix, e.g. obtained by projecting a spatial noise
// kernel onto the basis.
class SignalModel {
 public:
  static SignalModel diagonal(int n_modes, const VolterraKernel& kernel,
                              const Eigen::VectorXd& gains) {
    if (n_modes < 1) throw std::invalid_argument("SignalModel: need at least one mode");
    if (gains.size() != n_modes) throw std::invalid_argument("SignalModel: gains size mismatch");
    SignalModel m(n_modes, kernel);
    m.diagonal_ = true;
    m.gains_ = gains;
    return m;
  }

  static SignalModel coupled(int n_modes, const VolterraKernel& kernel,
                             const Eigen::MatrixXd& coupling) {
    if (n_modes < 1) throw std::invalid_argument("SignalModel: need at least one mode");
    if (coupling.rows() != n_modes || coupling.cols() != n_modes) {
      throw std::invalid_argument("SignalModel: coupling matrix must be n_modes x n_modes");
    }
    SignalModel m(n_modes, kernel);
    m.diagonal_ = false;
    m.coupling_ = coupling;
    return m;
  }

  // Projects a spatial noise kernel, given by samples on a uniform grid over
  // [0, 1] (odd sample count, Simpson weights), onto the sine basis:
  // G_{kl} = int int e_k(x) kappa(x, y) e_l(y) dx dy.  Such kernels always
  // define a Hilbert-Schmidt G.
  static SignalModel from_noise_kernel_samples(int n_modes, const VolterraKernel& kernel,
                                               const Eigen::MatrixXd& samples);

  int n_modes() const { return n_modes_; }
  const VolterraKernel& kernel() const { return kernel_; }
  bool is_diagonal() const { return diagonal_; }

  const Eigen::VectorXd& gains() const {
    if (!diagonal_) throw std::logic_error("SignalModel: gains on a coupled model");
    return gains_;
  }
  const Eigen::MatrixXd& coupling() const {
    if (diagonal_) throw std::logic_error("SignalModel: coupling on a diagonal model");
    return coupling_;
  }

  double lambda(int k) const { return laplacian_eigenvalue(k); }

  // Row k of G G^T summed, i.e. sum_l G_{kl}^2; the weight of mode k in the
  // Hilbert-Schmidt norm of S(u) G.
  Eigen::VectorXd noise_row_squares() const {
    if (diagonal_) return gains_.array().square();
    return coupling_.array().square().rowwise().sum();
  }

  // G G^T as a dense matrix (diagonal for per-mode gains).
  Eigen::MatrixXd noise_covariance() const {
    if (diagonal_) return gains_.array().square().matrix().asDiagonal();
    return coupling_ * coupling_.transpose();
  }

  // True when the model was built from a spatial kernel (always
  // Hilbert-Schmidt by construction).
  bool from_spatial_kernel() const { return from_spatial_kernel_; }

 private:
  SignalModel(int n_modes, const VolterraKernel& kernel) : n_modes_(n_modes), kernel_(kernel) {}

  int n_modes_;
  VolterraKernel kernel_;
  bool diagonal_ = true;
  bool from_spatial_kernel_ = false;
  Eigen::VectorXd gains_;
  Eigen::MatrixXd coupling_;
};

// Outcome of the regularity screen for pointwise observation.
//
// alpha is the kernel regularity exponent.  gamma estimates the blow-up of
// |S(u) G|_HS ~ c u^{-gamma} as u -> 0+ for the truncated model; for a
// Hilbert-Schmidt G the norm stays bounded and gamma is reported as 0.  The
// admissible smoothing exponents are [0, delta_sup) with
// delta_sup = alpha + 1/2 - gamma, and point evaluation in d = 1 needs some
// delta > 1/4, hence pointwise_ok == (delta_sup > 1/4).
struct RegularityReport {
  double alpha = 0.0;
  double gamma = 0.0;
  double delta_sup = 0.0;
  bool hilbert_schmidt = false;
  bool pointwise_ok = false;
  double gain_decay = 0.0;  // fitted tail exponent p in g_k ~ k^{-p} (diagonal models)
};

// Raised when a scenario requests pointwise observation that the regularity
// screen rejects.
class RegularityError : public std::runtime_error {
 public:
  explicit RegularityError(const std::string& what) : std::runtime_error(what) {}
};

// Screens the model for pointwise observability on a grid with step dt.
//
// The Hilbert-Schmidt test is structural for spatial-kernel models and a
// tail-decay proxy for diagonal ones: the gains of the upper half of the
// spectrum are fitted to g_k ~ k^{-p} and p > 1/2 (square-summable tail)
// classifies G as Hilbert-Schmidt.  Non-Hilbert-Schmidt models get gamma
// from the log-log slope of |S(u) G|_HS at the smallest resolvable lags
// u = dt and u = 2 dt; larger lags only see the exponential decay of the
// truncated spectrum and would corrupt the power-law fit.
RegularityReport validate_regularity(const SignalModel& model, double dt, double horizon);

// Throws RegularityError unless report.pointwise_ok.
void require_pointwise_ok(const RegularityReport& report);

}  // namespace gvf

#endif
