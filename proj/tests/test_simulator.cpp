#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gvf/observation.hpp"
#include "gvf/path_simulator.hpp"
#include "gvf/rng.hpp"
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

// |sample - expected| within 4 standard errors; SE taken from the sample.
void check_moment(const std::vector<double>& xs, double expected) {
  const MeanWithError s = sample_mean(xs);
  CHECK(std::fabs(s.mean - expected) <= 4.0 * s.se);
}

}  // namespace

TEST_CASE("random streams are pure functions of their key and index") {
  const RngStream a(42, RngStream::kSignalNoise, 7, 3);
  const RngStream b(42, RngStream::kSignalNoise, 7, 3);
  CHECK(a.key() == b.key());
  CHECK(a.word(0) == b.word(0));
  CHECK(a.normal(5) == b.normal(5));
  // out-of-order evaluation gives the same draws
  const double late = a.normal(100);
  const double early = a.normal(2);
  CHECK(late == b.normal(100));
  CHECK(early == b.normal(2));

  // any key component splits the stream
  CHECK(RngStream(42, RngStream::kObservationNoise, 7, 3).word(0) != a.word(0));
  CHECK(RngStream(43, RngStream::kSignalNoise, 7, 3).word(0) != a.word(0));
  CHECK(RngStream(42, RngStream::kSignalNoise, 8, 3).word(0) != a.word(0));
  CHECK(RngStream(42, RngStream::kSignalNoise, 7, 4).word(0) != a.word(0));
}

TEST_CASE("random streams deliver standard uniforms and normals") {
  const RngStream stream(2024, RngStream::kSignalNoise, 0, 0);
  const std::size_t m = 200000;
  std::vector<double> normals(m);
  double min_u = 1.0, max_u = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double u = stream.uniform(i);
    min_u = std::min(min_u, u);
    max_u = std::max(max_u, u);
    normals[i] = stream.normal(i);
  }
  CHECK(min_u > 0.0);
  CHECK(max_u <= 1.0);

  check_moment(normals, 0.0);
  std::vector<double> squares(m);
  for (std::size_t i = 0; i < m; ++i) squares[i] = normals[i] * normals[i];
  check_moment(squares, 1.0);
  // lag-1 serial correlation
  std::vector<double> lagged(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) lagged[i] = normals[i] * normals[i + 1];
  check_moment(lagged, 0.0);
}

TEST_CASE("simulated paths are reproducible and stream-stable") {
  const VolterraKernel kernel = VolterraKernel::fractional(0.75);
  const TimeGrid grid(1.0, 16);
  const KernelStepTable table(kernel, grid);
  const ObservationModel obs2 = ObservationModel::from_points({0.3, 0.8}, 2);
  Eigen::VectorXd g2(2);
  g2 << 1.0, 0.5;
  const SignalModel model2 = SignalModel::diagonal(2, kernel, g2);
  const PathSimulator sim2(model2, obs2, table);

  const PathBundle p1 = sim2.simulate(99, 4);
  const PathBundle p2 = sim2.simulate(99, 4);
  CHECK((p1.signal_modes - p2.signal_modes).norm() == 0.0);
  CHECK((p1.observation_path - p2.observation_path).norm() == 0.0);

  const PathBundle other = sim2.simulate(99, 5);
  CHECK((p1.signal_modes - other.signal_modes).norm() != 0.0);

  // enlarging the model must not disturb the draws of existing modes or
  // channels: streams are keyed by index, not by counts
  Eigen::VectorXd g3(3);
  g3 << 1.0, 0.5, 0.25;
  const SignalModel model3 = SignalModel::diagonal(3, kernel, g3);
  const ObservationModel obs3 = ObservationModel::from_points({0.3, 0.8, 0.55}, 3);
  const PathSimulator sim3(model3, obs3, table);
  const PathBundle p3 = sim3.simulate(99, 4);
  CHECK((p3.driving_increments.leftCols(2) - p1.driving_increments).norm() == 0.0);
  CHECK((p3.observation_noise.leftCols(2) - p1.observation_noise).norm() == 0.0);
}

TEST_CASE("path bundles satisfy the defining recursions exactly") {
  const VolterraKernel kernel = VolterraKernel::fractional(0.8);
  const TimeGrid grid(1.0, 24);
  const KernelStepTable table(kernel, grid);
  const ObservationModel obs = ObservationModel::from_points({0.41, 0.77}, 2);
  Eigen::MatrixXd mixing(2, 2);
  mixing << 0.8, 0.3, 0.1, 0.5;
  const SignalModel model = SignalModel::coupled(2, kernel, mixing);
  const PathSimulator sim(model, obs, table);
  const PathBundle p = sim.simulate(7, 0);
  const double dt = grid.dt();

  // Volterra increments against a direct kernel-table contraction
  for (int i : {0, 5, 23}) {
    for (int k = 0; k < 2; ++k) {
      double acc = 0.0;
      for (int l = 0; l <= i; ++l) {
        acc += table.increment_coeff(static_cast<std::size_t>(i), static_cast<std::size_t>(l)) *
               p.driving_increments(l, k);
      }
      CHECK(p.volterra_increments(i, k) == doctest::Approx(acc).epsilon(1e-13));
    }
  }

  // one-step evolution and observation assembly
  for (int i = 0; i < 24; ++i) {
    for (int k = 0; k < 2; ++k) {
      const double decay = std::exp(-model.lambda(k + 1) * dt);
      const double step = decay * p.signal_modes(i, k) +
                          mixing.row(k).dot(p.volterra_increments.row(i));
      CHECK(p.signal_modes(i + 1, k) == doctest::Approx(step).epsilon(1e-12));
    }
    for (int j = 0; j < 2; ++j) {
      const double drift = obs.coefficients().row(j).dot(p.signal_modes.row(i)) * dt;
      CHECK(p.observation_increments(i, j) ==
            doctest::Approx(drift + p.observation_noise(i, j)).epsilon(1e-12));
      CHECK(p.observation_path(i + 1, j) ==
            doctest::Approx(p.observation_path(i, j) + p.observation_increments(i, j))
                .epsilon(1e-12));
    }
  }
  CHECK(p.observation_path.row(0).norm() == 0.0);
  CHECK(p.signal_modes.row(0).norm() == 0.0);
}

TEST_CASE("sampled signal moments match the exact discrete covariance") {
  const std::size_t paths = 6000;
  const ObservationModel obs = ObservationModel::from_points({0.5}, 2);

  SUBCASE("fractional driving noise, h = 0.9") {
    // At h = 0.9 the discrete law sits visibly away from the SDE limit on
    // coarse grids, so this is the regime where simulator and second-moment
    // table must agree with each other *exactly* in distribution.
    const VolterraKernel kernel = VolterraKernel::fractional(0.9);
    const TimeGrid grid(1.0, 32);
    const KernelStepTable table(kernel, grid);
    Eigen::VectorXd gains(2);
    gains << 1.0, 0.6;
    const SignalModel model = SignalModel::diagonal(2, kernel, gains);
    const SignalCovariance cov(model, table);
    const PathSimulator sim(model, obs, table);

    std::vector<double> var1(paths), var2(paths), cross_time(paths), cross_mode(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      const PathBundle b = sim.simulate(1234, p);
      var1[p] = b.signal_modes(32, 0) * b.signal_modes(32, 0);
      var2[p] = b.signal_modes(32, 1) * b.signal_modes(32, 1);
      cross_time[p] = b.signal_modes(16, 0) * b.signal_modes(32, 0);
      cross_mode[p] = b.signal_modes(32, 0) * b.signal_modes(32, 1);
    }
    check_moment(var1, cov.mode_covariance(1, 32, 32));
    check_moment(var2, cov.mode_covariance(2, 32, 32));
    check_moment(cross_time, cov.mode_covariance(1, 16, 32));
    check_moment(cross_mode, 0.0);  // independent modes
  }

  SUBCASE("coupled mixing matrix") {
    const VolterraKernel kernel = VolterraKernel::fractional(0.75);
    const TimeGrid grid(1.0, 24);
    const KernelStepTable table(kernel, grid);
    Eigen::MatrixXd mixing(2, 2);
    mixing << 0.8, 0.3, 0.1, 0.5;
    const SignalModel model = SignalModel::coupled(2, kernel, mixing);
    const SignalCovariance cov(model, table);
    const PathSimulator sim(model, obs, table);

    std::vector<double> cross(paths), var1(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      const PathBundle b = sim.simulate(77, p);
      cross[p] = b.signal_modes(24, 0) * b.signal_modes(24, 1);
      var1[p] = b.signal_modes(24, 0) * b.signal_modes(24, 0);
    }
    const Eigen::MatrixXd block = cov.mode_block(24, 24);
    check_moment(cross, block(0, 1));
    check_moment(var1, block(0, 0));
  }

  SUBCASE("white driving noise") {
    const VolterraKernel kernel = VolterraKernel::brownian();
    const TimeGrid grid(1.0, 32);
    const KernelStepTable table(kernel, grid);
    Eigen::VectorXd gains(2);
    gains << 1.0, 0.6;
    const SignalModel model = SignalModel::diagonal(2, kernel, gains);
    const SignalCovariance cov(model, table);
    const PathSimulator sim(model, obs, table);

    std::vector<double> var1(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      const PathBundle b = sim.simulate(55, p);
      var1[p] = b.signal_modes(32, 0) * b.signal_modes(32, 0);
    }
    check_moment(var1, cov.mode_covariance(1, 32, 32));
  }
}

TEST_CASE("observation paths accumulate the quadratic variation of the noise") {
  const VolterraKernel kernel = VolterraKernel::fractional(0.75);
  const TimeGrid grid(1.0, 512);
  const KernelStepTable table(kernel, grid);
  const ObservationModel obs = ObservationModel::from_points({0.3}, 1);
  Eigen::VectorXd gains(1);
  gains << 1.0;
  const SignalModel model = SignalModel::diagonal(1, kernel, gains);
  const PathSimulator sim(model, obs, table);

  std::vector<double> qv(32);
  for (std::size_t p = 0; p < qv.size(); ++p) {
    const PathBundle b = sim.simulate(900, p);
    qv[p] = b.observation_increments.col(0).squaredNorm();
  }
  const MeanWithError s = sample_mean(qv);
  CHECK(std::fabs(s.mean - grid.horizon()) <= 0.05);
}

TEST_CASE("simulator rejects inconsistent inputs") {
  const VolterraKernel kernel = VolterraKernel::fractional(0.75);
  const TimeGrid grid(1.0, 8);
  const KernelStepTable table(kernel, grid);
  Eigen::VectorXd gains(2);
  gains << 1.0, 0.5;
  const SignalModel model = SignalModel::diagonal(2, kernel, gains);

  const ObservationModel wrong_modes = ObservationModel::from_points({0.5}, 3);
  CHECK_THROWS_AS(PathSimulator(model, wrong_modes, table), std::invalid_argument);

  const SignalModel other_kernel = SignalModel::diagonal(2, VolterraKernel::fractional(0.6), gains);
  const ObservationModel obs = ObservationModel::from_points({0.5}, 2);
  CHECK_THROWS_AS(PathSimulator(other_kernel, obs, table), std::invalid_argument);
}
