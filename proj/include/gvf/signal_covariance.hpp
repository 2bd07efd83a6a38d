#ifndef GVF_SIGNAL_COVARIANCE_HPP
#define GVF_SIGNAL_COVARIANCE_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "gvf/observation.hpp"
#include "gvf/signal_model.hpp"
#include "gvf/time_grid.hpp"
#include "gvf/volterra_kernel.hpp"

namespace gvf {

// Cached kernel values on the simulation grid: K(t_i, s*_l) for every node
// t_i and every midpoint s*_l with l < i.  Both the simulator and the exact
// discrete covariance are defined in terms of the increment coefficients
//   kappa(m, l) = K(t_{m+1}, s*_l) - K(t_m, s*_l)   (the second term only
// when l < m), so building this table once per (kernel, grid) pair removes
// all quadrature from the inner loops.
class KernelStepTable {
 public:
  KernelStepTable(const VolterraKernel& kernel, const TimeGrid& grid);

  const TimeGrid& grid() const { return grid_; }
  const VolterraKernel& kernel() const { return kernel_; }

  // K(t_i, s*_l); requires 1 <= i <= steps and l < i.
  double value(std::size_t i, std::size_t l) const {
    check_pair(i, l);
    return values_[offset(i) + l];
  }

  // kappa(m, l) for 0 <= l <= m <= steps-1: the coefficient of the driving
  // increment DeltaW_l in the Volterra increment Delta b_m.
  double increment_coeff(std::size_t m, std::size_t l) const {
    check_pair(m + 1, l);
    double v = values_[offset(m + 1) + l];
    if (l < m) v -= values_[offset(m) + l];
    return v;
  }

 private:
  static std::size_t offset(std::size_t i) { return (i - 1) * i / 2; }
  void check_pair(std::size_t i, std::size_t l) const;

  VolterraKernel kernel_;
  TimeGrid grid_;
  std::vector<double> values_;  // row i (1-based) holds K(t_i, s*_0..s*_{i-1})
};

// Exact second moments of the discretised signal.  The discrete model is
// linear in the driving Gaussian increments: theta^k_{t_i} = sum_l
// d_k(i, l) DeltaW^k_l, with d_k following the one-step recursion
//   d_k(i+1, l) = exp(-lambda_k dt) d_k(i, l) + g_k kappa(i, l),
// so covariances are dt-weighted inner products of the d rows.  These are
// the moments an estimator sees on the grid; no quadrature is involved.
class SignalCovariance {
 public:
  SignalCovariance(const SignalModel& model, const KernelStepTable& table);

  const SignalModel& model() const { return model_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t n_modes() const { return static_cast<std::size_t>(model_.n_modes()); }

  // E[theta^k_{t_i} theta^k_{t_l}]; diagonal models only (k is 1-based).
  double mode_covariance(int k, std::size_t i, std::size_t l) const;

  // E[theta_{t_i} theta_{t_l}^T] over mode coefficients (N x N).
  Eigen::MatrixXd mode_block(std::size_t i, std::size_t l) const;

  // out[k-1] = E[theta_{t_l}(z_j) theta^k_{t_i}] for all modes k: the field
  // value observed by channel j at node l against each coefficient at node i.
  // `out` must hold n_modes() doubles.
  void field_mode_slice(const ObservationModel& obs, std::size_t j,
                        std::size_t i, std::size_t l, double* out) const;

  // [p][q] = E[theta_{t_i}(z_p) theta_{t_l}(z_q)]: channel-space covariance
  // across a node pair.
  Eigen::MatrixXd pointwise_cross(const ObservationModel& obs, std::size_t i,
                                  std::size_t l) const;

  // Single-node case of pointwise_cross: second moments of the observed
  // field values at node i.
  Eigen::MatrixXd pointwise(const ObservationModel& obs, std::size_t i) const {
    return pointwise_cross(obs, i, i);
  }

 private:
  std::size_t pair_index(std::size_t i, std::size_t l) const;

  SignalModel model_;
  TimeGrid grid_;
  bool diagonal_;
  // Diagonal models: per-mode packed lower triangles C_k(i, l), 0<=l<=i<=n_t.
  std::vector<Eigen::VectorXd> mode_tables_;
  // Coupled models: packed N x N blocks E[theta_i theta_l^T], l <= i.
  std::vector<Eigen::MatrixXd> blocks_;
};

// Continuous-time second moment of one signal mode, evaluated by direct
// quadrature of the double integral
//   E[theta^k_s theta^k_t] = g_k^2 int_0^s int_0^t e^{-lambda_k (s-r)}
//                            e^{-lambda_k (t-v)} phi(r, v) dr dv,
// where phi is the covariance density of the driving noise (a Dirac on the
// diagonal for Brownian driving, h(2h-1)|r-v|^{2h-2} for the fractional
// kernel).  Used as an independent check of SignalCovariance; converges to
// the same limit from the opposite direction (time discretisation refines
// toward the integral, the discrete model refines toward the SDE).  `s` and
// `t` must be grid nodes; each step is split into `cells_per_step` uniform
// quadrature cells (at least 16, enforced).  Cell pairs touching the
// diagonal integrate the |r-v|^{2h-2} singularity exactly; all other pairs
// use the midpoint rule.
double continuous_mode_covariance(const SignalModel& model, const TimeGrid& grid,
                                  int k, std::size_t node_s, std::size_t node_t,
                                  std::size_t cells_per_step = 16);

}  // namespace gvf

#endif
