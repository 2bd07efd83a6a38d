#include "gvf/path_simulator.hpp"

#include <cmath>
#include <stdexcept>

namespace gvf {

PathSimulator::PathSimulator(const SignalModel& model, const ObservationModel& obs,
                             const KernelStepTable& table)
    : model_(model), obs_(obs), grid_(table.grid()) {
  if (obs.n_modes() != model.n_modes()) {
    throw std::invalid_argument("PathSimulator: observation mode count mismatch");
  }
  const VolterraKernel& tk = table.kernel();
  if (tk.kind() != model.kernel().kind() || tk.hurst() != model.kernel().hurst()) {
    throw std::invalid_argument("PathSimulator: kernel table built for a different kernel");
  }
  const std::size_t n = static_cast<std::size_t>(grid_.steps());
  kappa_.resize(n * (n + 1) / 2);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t l = 0; l <= m; ++l) {
      kappa_[m * (m + 1) / 2 + l] = table.increment_coeff(m, l);
    }
  }
  decay_.resize(model.n_modes());
  for (int k = 1; k <= model.n_modes(); ++k) {
    decay_[k - 1] = std::exp(-model.lambda(k) * grid_.dt());
  }
}

PathBundle PathSimulator::simulate(std::uint64_t seed, std::uint64_t path_index) const {
  const int n = grid_.steps();
  const int nn = model_.n_modes();
  const int nch = obs_.channels();
  const double dt = grid_.dt();
  const double sqrt_dt = std::sqrt(dt);

  PathBundle out;
  out.driving_increments.resize(n, nn);
  for (int k = 0; k < nn; ++k) {
    RngStream stream(seed, RngStream::kSignalNoise, path_index,
                     static_cast<std::uint64_t>(k));
    for (int l = 0; l < n; ++l) {
      out.driving_increments(l, k) = sqrt_dt * stream.normal(static_cast<std::uint64_t>(l));
    }
  }

  out.volterra_increments.resize(n, nn);
  for (int k = 0; k < nn; ++k) {
    const double* dw = out.driving_increments.col(k).data();
    for (int i = 0; i < n; ++i) {
      const double* row = kappa_.data() + static_cast<std::size_t>(i) * (i + 1) / 2;
      double acc = 0.0;
      for (int l = 0; l <= i; ++l) acc += row[l] * dw[l];
      out.volterra_increments(i, k) = acc;
    }
  }

  out.signal_modes.resize(n + 1, nn);
  out.signal_modes.row(0).setZero();
  if (model_.is_diagonal()) {
    const Eigen::VectorXd& g = model_.gains();
    for (int i = 0; i < n; ++i) {
      out.signal_modes.row(i + 1) =
          decay_.transpose().cwiseProduct(out.signal_modes.row(i)) +
          g.transpose().cwiseProduct(out.volterra_increments.row(i));
    }
  } else {
    const Eigen::MatrixXd& g = model_.coupling();
    for (int i = 0; i < n; ++i) {
      out.signal_modes.row(i + 1) =
          decay_.transpose().cwiseProduct(out.signal_modes.row(i)) +
          (g * out.volterra_increments.row(i).transpose()).transpose();
    }
  }

  out.observation_noise.resize(n, nch);
  for (int j = 0; j < nch; ++j) {
    RngStream stream(seed, RngStream::kObservationNoise, path_index,
                     static_cast<std::uint64_t>(j));
    for (int i = 0; i < n; ++i) {
      out.observation_noise(i, j) = sqrt_dt * stream.normal(static_cast<std::uint64_t>(i));
    }
  }

  out.observation_increments =
      out.signal_modes.topRows(n) * obs_.coefficients().transpose() * dt +
      out.observation_noise;

  out.observation_path.resize(n + 1, nch);
  out.observation_path.row(0).setZero();
  for (int i = 0; i < n; ++i) {
    out.observation_path.row(i + 1) =
        out.observation_path.row(i) + out.observation_increments.row(i);
  }
  return out;
}

}  // namespace gvf
