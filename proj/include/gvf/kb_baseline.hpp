#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gvf/observation.hpp"
#include "gvf/signal_model.hpp"
#include "gvf/spectral_field.hpp"
#include "gvf/time_grid.hpp"

namespace gvf {

// State of the spectral Riccati integration at one time node: the mode-space
// error covariance of the Kalman-Bucy filter for the Brownian-kernel signal.
struct RiccatiState {
  Eigen::MatrixXd P;  // n_modes x n_modes, symmetric PSD
  double t = 0.0;
};

// Integrates dP/dt = Lambda P + P Lambda + Q - P a^T a P with
// Lambda = diag(-lambda_k), Q the mode-noise covariance (diag(g_k^2) or
// G G^T), and a the channel coefficient matrix, using the exponential-Euler
// step P_{i+1} = E P_i E + dt (Q - P_i a^T a P_i), E = diag(e^{-lambda_k dt}),
// symmetrizing after each step.  P(0) = 0.
//
// Only defined for the Brownian kernel (white-noise-in-time signal); other
// kernels are rejected with std::invalid_argument.
std::vector<RiccatiState> riccati_integrate(const SignalModel& model, const ObservationModel& obs,
                                            const TimeGrid& grid);

// Kalman-Bucy filter in mild form driven by the observation path:
//   theta_{i+1} = E theta_i + E P_i a^T (dxi_i - a theta_i dt),  theta_0 = 0.
// `states` must come from riccati_integrate on the same grid; the observation
// path has grid.steps()+1 rows.  Returns the per-node filtered field.
std::vector<SpectralField> kb_filter(const std::vector<RiccatiState>& states,
                                     const ObservationModel& obs,
                                     const Eigen::MatrixXd& observation_path,
                                     const TimeGrid& grid);

}  // namespace gvf
