#ifndef GVF_PATH_SIMULATOR_HPP
#define GVF_PATH_SIMULATOR_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gvf/observation.hpp"
#include "gvf/rng.hpp"
#include "gvf/signal_covariance.hpp"
#include "gvf/signal_model.hpp"
#include "gvf/time_grid.hpp"

namespace gvf {

// One simulated trajectory of the signal/observation pair on the grid.
// Rows index time (steps for increments, nodes for levels), columns index
// modes or observation channels.
struct PathBundle {
  Eigen::MatrixXd driving_increments;     // steps x modes: DeltaW^k_l
  Eigen::MatrixXd volterra_increments;    // steps x modes: Delta b^k_i (pre-gain)
  Eigen::MatrixXd signal_modes;           // (steps+1) x modes: theta^k_{t_i}
  Eigen::MatrixXd observation_noise;      // steps x channels: additive noise increments
  Eigen::MatrixXd observation_increments; // steps x channels: Delta xi_i
  Eigen::MatrixXd observation_path;       // (steps+1) x channels: xi_{t_i}, xi_0 = 0
};

// Exact sampler of the discretised model.  The driving noise is sampled at
// step midpoints through the kernel table,
//   Delta b^k_i = sum_{l <= i} kappa(i, l) DeltaW^k_l,
// the modes evolve by the exact one-step exponential
//   theta_{i+1} = e^{-Lambda dt} theta_i + G Delta b_i,
// and the observation increments use the left-point signal value,
//   Delta xi_i = A theta_{t_i} dt + DeltaV_i.
// A path is a pure function of (seed, path_index): streams are keyed per
// mode and per channel, so the same (seed, path) pair reproduces the same
// trajectory regardless of how many paths are drawn or in which order.
class PathSimulator {
 public:
  PathSimulator(const SignalModel& model, const ObservationModel& obs,
                const KernelStepTable& table);

  const SignalModel& model() const { return model_; }
  const ObservationModel& observation() const { return obs_; }
  const TimeGrid& grid() const { return grid_; }

  PathBundle simulate(std::uint64_t seed, std::uint64_t path_index) const;

 private:
  SignalModel model_;
  ObservationModel obs_;
  TimeGrid grid_;
  std::vector<double> kappa_;  // packed kappa(m, l), l <= m, hoisted out of the path loop
  Eigen::VectorXd decay_;      // e^{-lambda_k dt}
};

}  // namespace gvf

#endif
