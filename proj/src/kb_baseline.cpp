#include "gvf/kb_baseline.hpp"

#include <cmath>
#include <stdexcept>

namespace gvf {

std::vector<RiccatiState> riccati_integrate(const SignalModel& model, const ObservationModel& obs,
                                            const TimeGrid& grid) {
  if (model.kernel().kind() != KernelKind::kBrownian) {
    throw std::invalid_argument(
        "riccati_integrate: only the Brownian kernel admits a Riccati ODE; "
        "use the general covariance-equation solver for Volterra kernels");
  }
  if (obs.n_modes() != model.n_modes()) {
    throw std::invalid_argument("riccati_integrate: observation/model mode count mismatch");
  }
  const int nm = model.n_modes();
  const double dt = grid.dt();
  const Eigen::MatrixXd q = model.noise_covariance();
  const Eigen::MatrixXd& a = obs.coefficients();
  const Eigen::MatrixXd ata = a.transpose() * a;
  Eigen::VectorXd decay(nm);
  for (int k = 1; k <= nm; ++k) decay(k - 1) = std::exp(-model.lambda(k) * dt);

  std::vector<RiccatiState> states;
  states.reserve(static_cast<std::size_t>(grid.steps()) + 1);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nm, nm);
  states.push_back({p, 0.0});
  for (int i = 0; i < grid.steps(); ++i) {
    const Eigen::MatrixXd drift = q - p * ata * p;
    p = decay.asDiagonal() * p * decay.asDiagonal() + dt * drift;
    p = 0.5 * (p + p.transpose()).eval();
    states.push_back({p, grid.node(i + 1)});
  }
  return states;
}

std::vector<SpectralField> kb_filter(const std::vector<RiccatiState>& states,
                                     const ObservationModel& obs,
                                     const Eigen::MatrixXd& observation_path,
                                     const TimeGrid& grid) {
  const int steps = grid.steps();
  const int nm = obs.n_modes();
  if (states.size() != static_cast<std::size_t>(steps) + 1) {
    throw std::invalid_argument("kb_filter: state sequence does not match the grid");
  }
  if (observation_path.rows() != steps + 1 || observation_path.cols() != obs.channels()) {
    throw std::invalid_argument("kb_filter: observation path shape mismatch");
  }
  for (const RiccatiState& s : states) {
    if (s.P.rows() != nm || s.P.cols() != nm) {
      throw std::invalid_argument("kb_filter: state dimension does not match the observation");
    }
  }
  const double dt = grid.dt();
  const Eigen::MatrixXd& a = obs.coefficients();
  Eigen::VectorXd decay(nm);
  for (int k = 1; k <= nm; ++k) decay(k - 1) = std::exp(-laplacian_eigenvalue(k) * dt);

  std::vector<SpectralField> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(nm);
  out.emplace_back(theta);
  for (int i = 0; i < steps; ++i) {
    const Eigen::VectorXd dxi =
        (observation_path.row(i + 1) - observation_path.row(i)).transpose();
    const Eigen::VectorXd innovation = dxi - dt * (a * theta);
    theta = (decay.asDiagonal() * (theta + states[static_cast<std::size_t>(i)].P *
                                               (a.transpose() * innovation)))
                .eval();
    out.emplace_back(theta);
  }
  return out;
}

}  // namespace gvf
