#include "gvf/oracle.hpp"

#include <stdexcept>
#include <vector>

namespace gvf {

Eigen::MatrixXd observation_increment_covariance(const SignalCovariance& cov,
                                                 const ObservationModel& obs,
                                                 std::size_t steps) {
  const std::size_t n = static_cast<std::size_t>(cov.grid().steps());
  if (steps > n) throw std::out_of_range("observation_increment_covariance: steps out of range");
  const auto nch = static_cast<Eigen::Index>(obs.channels());
  const double dt = cov.grid().dt();
  const auto dim = static_cast<Eigen::Index>(steps) * nch;
  Eigen::MatrixXd out(dim, dim);
  for (std::size_t r = 0; r < steps; ++r) {
    for (std::size_t u = 0; u <= r; ++u) {
      // Signal part: left-point values theta_{t_r}, theta_{t_u} seen through
      // the channels; noise part: independent increments on the diagonal.
      Eigen::MatrixXd block = dt * dt * cov.pointwise_cross(obs, r, u);
      if (r == u) block.diagonal().array() += dt;
      out.block(static_cast<Eigen::Index>(r) * nch, static_cast<Eigen::Index>(u) * nch,
                nch, nch) = block;
      if (r != u) {
        out.block(static_cast<Eigen::Index>(u) * nch, static_cast<Eigen::Index>(r) * nch,
                  nch, nch) = block.transpose();
      }
    }
  }
  return out;
}

Eigen::MatrixXd signal_observation_cross(const SignalCovariance& cov,
                                         const ObservationModel& obs,
                                         std::size_t node, std::size_t steps) {
  const std::size_t n = static_cast<std::size_t>(cov.grid().steps());
  if (node > n || steps > n) {
    throw std::out_of_range("signal_observation_cross: index out of range");
  }
  const auto nch = static_cast<Eigen::Index>(obs.channels());
  const auto nn = static_cast<Eigen::Index>(cov.n_modes());
  const double dt = cov.grid().dt();
  Eigen::MatrixXd out(nn, static_cast<Eigen::Index>(steps) * nch);
  std::vector<double> slice(static_cast<std::size_t>(nn));
  for (std::size_t r = 0; r < steps; ++r) {
    for (Eigen::Index j = 0; j < nch; ++j) {
      // E[theta^k_node Dxi^j_r] = dt E[theta^k_node theta_{t_r}(z_j)]
      cov.field_mode_slice(obs, static_cast<std::size_t>(j), node, r, slice.data());
      for (Eigen::Index k = 0; k < nn; ++k) {
        out(k, static_cast<Eigen::Index>(r) * nch + j) = dt * slice[static_cast<std::size_t>(k)];
      }
    }
  }
  return out;
}

BestLinearEstimate best_linear_estimate(const SignalCovariance& cov,
                                        const ObservationModel& obs,
                                        std::size_t node, std::size_t obs_steps) {
  const std::size_t dim = obs_steps * static_cast<std::size_t>(obs.channels()) + cov.n_modes();
  if (dim > 4096) {
    throw std::invalid_argument(
        "best_linear_estimate: stacked dimension exceeds 4096; reduce steps or channels");
  }
  const Eigen::MatrixXd obs_cov = observation_increment_covariance(cov, obs, obs_steps);
  const Eigen::MatrixXd cross = signal_observation_cross(cov, obs, node, obs_steps);

  BestLinearEstimate est;
  if (obs_steps == 0) {
    est.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cov.n_modes()), 0);
    est.error_covariance = cov.mode_block(node, node);
    return est;
  }
  // The noise floor dt * I keeps the stacked covariance strictly positive
  // definite, so a Cholesky solve is safe.
  const Eigen::LLT<Eigen::MatrixXd> llt(obs_cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("best_linear_estimate: observation covariance not PD");
  }
  est.weights = llt.solve(cross.transpose()).transpose();
  est.error_covariance = cov.mode_block(node, node) - est.weights * cross.transpose();
  return est;
}

Eigen::VectorXd apply_estimate(const Eigen::MatrixXd& weights,
                               const Eigen::MatrixXd& observation_increments,
                               std::size_t steps) {
  const auto nch = observation_increments.cols();
  if (weights.cols() != static_cast<Eigen::Index>(steps) * nch) {
    throw std::invalid_argument("apply_estimate: weight/increment shape mismatch");
  }
  if (observation_increments.rows() < static_cast<Eigen::Index>(steps)) {
    throw std::invalid_argument("apply_estimate: not enough increment rows");
  }
  Eigen::VectorXd stacked(static_cast<Eigen::Index>(steps) * nch);
  for (std::size_t r = 0; r < steps; ++r) {
    for (Eigen::Index j = 0; j < nch; ++j) {
      stacked(static_cast<Eigen::Index>(r) * nch + j) =
          observation_increments(static_cast<Eigen::Index>(r), j);
    }
  }
  return weights * stacked;
}

}  // namespace gvf
