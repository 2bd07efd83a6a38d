#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gvf/oracle.hpp"
#include "gvf/observation.hpp"
#include "gvf/path_simulator.hpp"
#include "gvf/signal_covariance.hpp"
#include "gvf/signal_model.hpp"
#include "gvf/time_grid.hpp"
#include "gvf/volterra_kernel.hpp"

namespace {

using namespace gvf;

struct MeanWithError {
  double mean;
  double se;
};

MeanWithError sample_mean(const std::vector<double>& xs) {
  const double m = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= m;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (m - 1.0);
  return {mean, std::sqrt(var / m)};
}

void check_moment(const std::vector<double>& xs, double expected) {
  const MeanWithError s = sample_mean(xs);
  CHECK(std::fabs(s.mean - expected) <= 4.0 * s.se);
}

}  // namespace

TEST_CASE("two-step estimator matches hand-computed conditioning") {
  // One white-noise mode, one channel at z = 1/2, two steps of size 1/2.
  // Everything below follows by hand from theta_1 = g DW_0,
  // theta_2 = e g DW_0 + g DW_1, Dxi_0 = DV_0, Dxi_1 = a theta_1 dt + DV_1.
  const double dt = 0.5;
  const double g = 0.8;
  const double lambda = M_PI * M_PI;
  const double e = std::exp(-lambda * dt);
  const double a = std::sqrt(2.0);  // sqrt(2) sin(pi/2)

  const VolterraKernel kernel = VolterraKernel::brownian();
  const TimeGrid grid(1.0, 2);
  const KernelStepTable table(kernel, grid);
  Eigen::VectorXd gains(1);
  gains << g;
  const SignalModel model = SignalModel::diagonal(1, kernel, gains);
  const SignalCovariance cov(model, table);
  const ObservationModel obs = ObservationModel::from_points({0.5}, 1);

  const Eigen::MatrixXd obs_cov = observation_increment_covariance(cov, obs, 2);
  CHECK(obs_cov(0, 0) == doctest::Approx(dt).epsilon(1e-13));
  CHECK(obs_cov(1, 0) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(obs_cov(1, 1) == doctest::Approx(a * a * dt * dt * g * g * dt + dt).epsilon(1e-13));

  const Eigen::MatrixXd cross = signal_observation_cross(cov, obs, 2, 2);
  CHECK(cross(0, 0) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(cross(0, 1) == doctest::Approx(a * dt * e * g * g * dt).epsilon(1e-13));

  const BestLinearEstimate est = best_linear_estimate(cov, obs, 2, 2);
  const double w1 = (a * dt * e * g * g * dt) / (a * a * dt * dt * g * g * dt + dt);
  CHECK(est.weights(0, 0) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(est.weights(0, 1) == doctest::Approx(w1).epsilon(1e-12));

  const double prior = e * e * g * g * dt + g * g * dt;
  CHECK(est.error_covariance(0, 0) ==
        doctest::Approx(prior - w1 * a * dt * e * g * g * dt).epsilon(1e-12));
}

TEST_CASE("estimator obeys the tower property across observation horizons") {
  const VolterraKernel kernel = VolterraKernel::fractional(0.75);
  const TimeGrid grid(1.0, 8);
  const KernelStepTable table(kernel, grid);
  Eigen::VectorXd gains(2);
  gains << 1.0, 0.5;
  const SignalModel model = SignalModel::diagonal(2, kernel, gains);
  const SignalCovariance cov(model, table);
  const ObservationModel obs = ObservationModel::from_points({0.3, 0.7}, 2);
  const Eigen::Index nch = obs.channels();

  // Projecting the full-horizon estimate onto the smaller observation set
  // must reproduce the smaller estimate: W_small = W_full C, where C maps
  // the short increment stack to the conditional mean of the long one.
  const BestLinearEstimate full = best_linear_estimate(cov, obs, 8, 8);
  const BestLinearEstimate small = best_linear_estimate(cov, obs, 8, 4);
  const Eigen::MatrixXd sigma = observation_increment_covariance(cov, obs, 8);
  const Eigen::MatrixXd cross_ls = sigma.topLeftCorner(8 * nch, 4 * nch);
  const Eigen::MatrixXd sigma_s = sigma.topLeftCorner(4 * nch, 4 * nch);
  const Eigen::MatrixXd composed =
      full.weights * sigma_s.llt().solve(cross_ls.transpose()).transpose();
  CHECK((composed - small.weights).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("conditioning reduces uncertainty monotonically") {
  const VolterraKernel kernel = VolterraKernel::fractional(0.75);
  const TimeGrid grid(1.0, 8);
  const KernelStepTable table(kernel, grid);
  Eigen::VectorXd gains(2);
  gains << 1.0, 0.5;
  const SignalModel model = SignalModel::diagonal(2, kernel, gains);
  const SignalCovariance cov(model, table);
  const ObservationModel obs = ObservationModel::from_points({0.3, 0.7}, 2);

  const BestLinearEstimate none = best_linear_estimate(cov, obs, 8, 0);
  CHECK(none.weights.cols() == 0);
  CHECK((none.error_covariance - cov.mode_block(8, 8)).norm() <= 1e-14);

  Eigen::MatrixXd prev = none.error_covariance;
  for (std::size_t steps : {2u, 4u, 8u}) {
    const BestLinearEstimate est = best_linear_estimate(cov, obs, 8, steps);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gap(prev - est.error_covariance);
    CHECK(gap.eigenvalues().minCoeff() >= -1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd(est.error_covariance);
    CHECK(psd.eigenvalues().minCoeff() >= -1e-12);
    prev = est.error_covariance;
  }
}

TEST_CASE("sampled estimation errors match the predicted conditional covariance") {
  const VolterraKernel kernel = VolterraKernel::fractional(0.75);
  const TimeGrid grid(1.0, 8);
  const KernelStepTable table(kernel, grid);
  Eigen::VectorXd gains(2);
  gains << 1.0, 0.5;
  const SignalModel model = SignalModel::diagonal(2, kernel, gains);
  const SignalCovariance cov(model, table);
  const ObservationModel obs = ObservationModel::from_points({0.3, 0.7}, 2);
  const PathSimulator sim(model, obs, table);
  const BestLinearEstimate est = best_linear_estimate(cov, obs, 8, 8);

  const std::size_t paths = 4000;
  std::vector<double> err_sq_1(paths), err_sq_2(paths), err_mean_1(paths), obs_cov_probe(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    const PathBundle b = sim.simulate(31415, p);
    const Eigen::VectorXd estimate = apply_estimate(est.weights, b.observation_increments, 8);
    const double e1 = b.signal_modes(8, 0) - estimate(0);
    const double e2 = b.signal_modes(8, 1) - estimate(1);
    err_sq_1[p] = e1 * e1;
    err_sq_2[p] = e2 * e2;
    err_mean_1[p] = e1;
    obs_cov_probe[p] = b.observation_increments(3, 0) * b.observation_increments(5, 1);
  }
  check_moment(err_mean_1, 0.0);
  check_moment(err_sq_1, est.error_covariance(0, 0));
  check_moment(err_sq_2, est.error_covariance(1, 1));

  // one off-diagonal entry of the stacked increment covariance, same stacking
  const Eigen::MatrixXd sigma = observation_increment_covariance(cov, obs, 8);
  check_moment(obs_cov_probe, sigma(3 * 2 + 0, 5 * 2 + 1));
}

TEST_CASE("reference estimator rejects oversized and malformed problems") {
  const VolterraKernel kernel = VolterraKernel::brownian();
  const TimeGrid grid(1.0, 1024);
  const KernelStepTable table(kernel, grid);
  Eigen::VectorXd gains(1);
  gains << 1.0;
  const SignalModel model = SignalModel::diagonal(1, kernel, gains);
  const SignalCovariance cov(model, table);
  const ObservationModel obs = ObservationModel::from_points({0.1, 0.3, 0.5, 0.7, 0.9}, 1);

  CHECK_THROWS_AS(best_linear_estimate(cov, obs, 1024, 1024), std::invalid_argument);
  CHECK_THROWS_AS(observation_increment_covariance(cov, obs, 1025), std::out_of_range);
  CHECK_THROWS_AS(signal_observation_cross(cov, obs, 1025, 4), std::out_of_range);

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(1, 8);
  Eigen::MatrixXd increments = Eigen::MatrixXd::Zero(4, 5);
  CHECK_THROWS_AS(apply_estimate(weights, increments, 4), std::invalid_argument);
}
