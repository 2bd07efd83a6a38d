#ifndef GVF_ORACLE_HPP
#define GVF_ORACLE_HPP

#include <Eigen/Dense>
#include <cstddef>

#include "gvf/observation.hpp"
#include "gvf/signal_covariance.hpp"

namespace gvf {

// Brute-force reference estimator.  The discretised signal and the stacked
// observation increments are jointly Gaussian with covariances available in
// closed form from SignalCovariance, so the conditional expectation
// E[theta_{t_i} | Delta xi_0 .. Delta xi_{l-1}] is a single linear solve.
// Cubic in l * channels and dense in memory: only viable on small grids,
// which is exactly its job — an independent check of the filter recursions.
//
// Stacking convention used everywhere: observation increment r, channel j
// lands at flat index r * channels + j.

// Covariance of the stacked increments (steps * channels square):
//   E[Dxi^j_r Dxi^j'_u] = dt^2 (A C(t_r, t_u) A^T)_{jj'} + dt delta_{ru} delta_{jj'}.
Eigen::MatrixXd observation_increment_covariance(const SignalCovariance& cov,
                                                 const ObservationModel& obs,
                                                 std::size_t steps);

// Cross covariance of the mode vector at `node` with the stacked increments
// (n_modes x steps * channels):  E[theta^k_{t_node} Dxi^j_r].
Eigen::MatrixXd signal_observation_cross(const SignalCovariance& cov,
                                         const ObservationModel& obs,
                                         std::size_t node, std::size_t steps);

struct BestLinearEstimate {
  Eigen::MatrixXd weights;           // n_modes x (steps * channels)
  Eigen::MatrixXd error_covariance;  // n_modes x n_modes, conditional covariance
};

// Conditional law of theta_{t_node} given the first `obs_steps` observation
// increments.  The stacked dimension obs_steps * channels + n_modes is capped
// at 4096; beyond that the dense solve stops being a meaningful reference.
BestLinearEstimate best_linear_estimate(const SignalCovariance& cov,
                                        const ObservationModel& obs,
                                        std::size_t node, std::size_t obs_steps);

// Applies estimate weights to the first `steps` rows of an increment matrix
// (steps x channels, as produced by the simulator).
Eigen::VectorXd apply_estimate(const Eigen::MatrixXd& weights,
                               const Eigen::MatrixXd& observation_increments,
                               std::size_t steps);

}  // namespace gvf

#endif
