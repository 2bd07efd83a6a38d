#include "gvf/signal_model.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gvf {

namespace {

// Composite Simpson weights on a uniform grid with an odd number of samples.
std::vector<double> simpson_weights(int n, double width) {
  const double h = width / (n - 1);
  std::vector<double> w(n, 0.0);
  for (int i = 0; i + 2 < n; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return w;
}

}  // namespace

SignalModel SignalModel::from_noise_kernel_samples(int n_modes, const VolterraKernel& kernel,
                                                   const Eigen::MatrixXd& samples) {
  const int m = static_cast<int>(samples.rows());
  if (samples.cols() != m) throw std::invalid_argument("noise kernel samples must be square");
  if (m < 3 || m % 2 == 0) {
    throw std::invalid_argument("noise kernel samples need an odd count >= 3 per axis");
  }
  const auto w = simpson_weights(m, 1.0);
  // B_{k p} = w_p e_k(x_p); then G = B S B^T.
  Eigen::MatrixXd basis(n_modes, m);
  for (int k = 1; k <= n_modes; ++k) {
    for (int p = 0; p < m; ++p) {
      basis(k - 1, p) = w[p] * basis_value(k, static_cast<double>(p) / (m - 1));
    }
  }
  Eigen::MatrixXd coupling = basis * samples * basis.transpose();
  SignalModel model = SignalModel::coupled(n_modes, kernel, coupling);
  model.from_spatial_kernel_ = true;
  return model;
}

namespace {

// Hilbert-Schmidt norm of S(u) G for the truncated model.
double semigroup_noise_norm(const SignalModel& model, const Eigen::VectorXd& row_sq, double u) {
  double acc = 0.0;
  for (int k = 1; k <= model.n_modes(); ++k) {
    acc += std::exp(-2.0 * model.lambda(k) * u) * row_sq[k - 1];
  }
  return std::sqrt(acc);
}

// Least-squares slope of log|g_k| against log k over the upper half of the
// spectrum.  Returns the decay exponent p (g_k ~ k^{-p}) or 0 when there are
// too few usable gains to fit.
double fit_gain_decay(const Eigen::VectorXd& gains, bool* fit_ok) {
  const int n = static_cast<int>(gains.size());
  std::vector<double> xs, ys;
  for (int k = (n + 1) / 2; k <= n; ++k) {
    const double g = std::abs(gains[k - 1]);
    if (g > 0.0) {
      xs.push_back(std::log(static_cast<double>(k)));
      ys.push_back(std::log(g));
    }
  }
  if (xs.size() < 2 || xs.front() == xs.back()) {
    *fit_ok = false;
    return 0.0;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  *fit_ok = true;
  return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

RegularityReport validate_regularity(const SignalModel& model, double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= 2.0 * dt)) {
    throw std::invalid_argument("validate_regularity: need 0 < dt and horizon >= 2 dt");
  }
  RegularityReport report;
  report.alpha = model.kernel().alpha();

  const Eigen::VectorXd row_sq = model.noise_row_squares();
  if (model.is_diagonal()) {
    bool fit_ok = false;
    report.gain_decay = fit_gain_decay(model.gains(), &fit_ok);
    // Square-summable tail (p > 1/2) or no fittable tail at all (single mode,
    // all-zero gains): treat as Hilbert-Schmidt.
    report.hilbert_schmidt = !fit_ok || report.gain_decay > 0.5;
  } else {
    report.hilbert_schmidt = true;
  }

  if (report.hilbert_schmidt || row_sq.sum() == 0.0) {
    report.gamma = 0.0;
  } else {
    const double f1 = semigroup_noise_norm(model, row_sq, dt);
    const double f2 = semigroup_noise_norm(model, row_sq, 2.0 * dt);
    report.gamma = std::max(0.0, (std::log(f1) - std::log(f2)) / std::log(2.0));
  }

  report.delta_sup = report.alpha + 0.5 - report.gamma;
  report.pointwise_ok = report.delta_sup > 0.25;
  return report;
}

void require_pointwise_ok(const RegularityReport& report) {
  if (!report.pointwise_ok) {
    throw RegularityError(
        "pointwise observation rejected: alpha + 1/2 - gamma = " +
        std::to_string(report.delta_sup) + " <= 1/4 (alpha = " + std::to_string(report.alpha) +
        ", gamma = " + std::to_string(report.gamma) + ")");
  }
}

}  // namespace gvf
