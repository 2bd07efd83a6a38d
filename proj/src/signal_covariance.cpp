#include "gvf/signal_covariance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gvf {

KernelStepTable::KernelStepTable(const VolterraKernel& kernel, const TimeGrid& grid)
    : kernel_(kernel), grid_(grid) {
  const std::size_t n = static_cast<std::size_t>(grid.steps());
  values_.resize(n * (n + 1) / 2);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = grid_.node(static_cast<int>(i));
    for (std::size_t l = 0; l < i; ++l) {
      values_[offset(i) + l] = kernel_.evaluate(t, grid_.midpoint(static_cast<int>(l)));
    }
  }
}

void KernelStepTable::check_pair(std::size_t i, std::size_t l) const {
  if (i < 1 || i > static_cast<std::size_t>(grid_.steps()) || l >= i) {
    throw std::out_of_range("KernelStepTable: index pair out of range");
  }
}

namespace {

// Coefficient table of one scalar mode: rows give theta^k_{t_i} as a linear
// combination of the driving increments, D(i, l) = coefficient of DeltaW_l.
// `gain` premultiplies the Volterra increment (1 for coupled models, where
// the mixing matrix is applied afterwards).
Eigen::MatrixXd increment_coefficients(const KernelStepTable& table, double lambda,
                                       double gain) {
  const int n = table.grid().steps();
  const double decay = std::exp(-lambda * table.grid().dt());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, n);
  for (int i = 0; i < n; ++i) {
    d.row(i + 1).head(i + 1) = decay * d.row(i).head(i + 1);
    for (int l = 0; l <= i; ++l) {
      d(i + 1, l) += gain * table.increment_coeff(static_cast<std::size_t>(i),
                                                  static_cast<std::size_t>(l));
    }
  }
  return d;
}

}  // namespace

SignalCovariance::SignalCovariance(const SignalModel& model, const KernelStepTable& table)
    : model_(model), grid_(table.grid()), diagonal_(model.is_diagonal()) {
  const VolterraKernel& tk = table.kernel();
  if (tk.kind() != model.kernel().kind() || tk.hurst() != model.kernel().hurst()) {
    throw std::invalid_argument("SignalCovariance: kernel table built for a different kernel");
  }
  const std::size_t n = static_cast<std::size_t>(grid_.steps());
  const std::size_t nn = static_cast<std::size_t>(model.n_modes());
  const std::size_t pairs = (n + 1) * (n + 2) / 2;
  const double dt = grid_.dt();

  const std::size_t bytes = 8 * pairs * (diagonal_? nn : nn * nn);
  if (bytes > 6'000'000'000ull) {
    throw std::invalid_argument("SignalCovariance: covariance table would need " +
                                std::to_string(bytes / 1'000'000) + " MB; reduce steps or modes");
  }

  if (diagonal_) {
    mode_tables_.reserve(nn);
    for (std::size_t k = 1; k <= nn; ++k) {
      const Eigen::MatrixXd d = increment_coefficients(
          table, model.lambda(static_cast<int>(k)), model.gains()[static_cast<Eigen::Index>(k - 1)]);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1),
                                                  static_cast<Eigen::Index>(n + 1));
      cov.selfadjointView<Eigen::Lower>().rankUpdate(d, dt);
      Eigen::VectorXd packed(static_cast<Eigen::Index>(pairs));
      for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t l = 0; l <= i; ++l) {
          packed[static_cast<Eigen::Index>(pair_index(i, l))] =
              cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
        }
      }
      mode_tables_.push_back(std::move(packed));
    }
  } else {
    std::vector<Eigen::MatrixXd> d;
    d.reserve(nn);
    for (std::size_t k = 1; k <= nn; ++k) {
      d.push_back(increment_coefficients(table, model.lambda(static_cast<int>(k)), 1.0));
    }
    const Eigen::MatrixXd q = model.noise_covariance();
    blocks_.assign(pairs, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nn),
                                                static_cast<Eigen::Index>(nn)));
    // E[theta^k_i theta^m_l] = dt (G G^T)_{km} sum_r d_k(i, r) d_m(l, r):
    // the modes share every driving increment through the mixing matrix.
    for (std::size_t k = 0; k < nn; ++k) {
      for (std::size_t m = 0; m <= k; ++m) {
        const Eigen::MatrixXd p = d[k] * d[m].transpose();
        for (std::size_t i = 0; i <= n; ++i) {
          for (std::size_t l = 0; l <= i; ++l) {
            Eigen::MatrixXd& block = blocks_[pair_index(i, l)];
            const auto ii = static_cast<Eigen::Index>(i);
            const auto ll = static_cast<Eigen::Index>(l);
            block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) =
                dt * q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) * p(ii, ll);
            if (m != k) {
              block(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
                  dt * q(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) * p(ll, ii);
            }
          }
        }
      }
    }
  }
}

std::size_t SignalCovariance::pair_index(std::size_t i, std::size_t l) const {
  const std::size_t n = static_cast<std::size_t>(grid_.steps());
  if (i > n || l > i) throw std::out_of_range("SignalCovariance: node pair out of range");
  return i * (i + 1) / 2 + l;
}

double SignalCovariance::mode_covariance(int k, std::size_t i, std::size_t l) const {
  if (!diagonal_) {
    throw std::logic_error("SignalCovariance: per-mode covariance on a coupled model");
  }
  if (k < 1 || k > model_.n_modes()) {
    throw std::out_of_range("SignalCovariance: mode index out of range");
  }
  const std::size_t hi = i >= l ? i : l;
  const std::size_t lo = i >= l ? l : i;
  return mode_tables_[static_cast<std::size_t>(k - 1)]
                     [static_cast<Eigen::Index>(pair_index(hi, lo))];
}

Eigen::MatrixXd SignalCovariance::mode_block(std::size_t i, std::size_t l) const {
  const auto nn = static_cast<Eigen::Index>(n_modes());
  if (diagonal_) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nn, nn);
    for (Eigen::Index k = 0; k < nn; ++k) {
      block(k, k) = mode_covariance(static_cast<int>(k + 1), i, l);
    }
    return block;
  }
  if (i >= l) return blocks_[pair_index(i, l)];
  return blocks_[pair_index(l, i)].transpose();
}

void SignalCovariance::field_mode_slice(const ObservationModel& obs, std::size_t j,
                                        std::size_t i, std::size_t l, double* out) const {
  if (obs.n_modes() != model_.n_modes()) {
    throw std::invalid_argument("SignalCovariance: observation mode count mismatch");
  }
  if (j >= static_cast<std::size_t>(obs.channels())) {
    throw std::out_of_range("SignalCovariance: channel index out of range");
  }
  const Eigen::MatrixXd& a = obs.coefficients();
  const auto jj = static_cast<Eigen::Index>(j);
  const auto nn = static_cast<Eigen::Index>(n_modes());
  if (diagonal_) {
    const std::size_t hi = i >= l ? i : l;
    const std::size_t lo = i >= l ? l : i;
    const std::size_t idx = pair_index(hi, lo);
    for (Eigen::Index k = 0; k < nn; ++k) {
      out[k] = a(jj, k) * mode_tables_[static_cast<std::size_t>(k)]
                                      [static_cast<Eigen::Index>(idx)];
    }
    return;
  }
  // out_k = sum_m a_{jm} E[theta^m_l theta^k_i]; the stored block for the
  // ordered pair carries E[theta_hi theta_lo^T].
  if (l >= i) {
    const Eigen::MatrixXd& block = blocks_[pair_index(l, i)];
    for (Eigen::Index k = 0; k < nn; ++k) out[k] = a.row(jj).dot(block.col(k));
  } else {
    const Eigen::MatrixXd& block = blocks_[pair_index(i, l)];
    for (Eigen::Index k = 0; k < nn; ++k) out[k] = a.row(jj).dot(block.row(k));
  }
}

Eigen::MatrixXd SignalCovariance::pointwise_cross(const ObservationModel& obs, std::size_t i,
                                                  std::size_t l) const {
  if (obs.n_modes() != model_.n_modes()) {
    throw std::invalid_argument("SignalCovariance: observation mode count mismatch");
  }
  const Eigen::MatrixXd& a = obs.coefficients();
  return a * mode_block(i, l) * a.transpose();
}

double continuous_mode_covariance(const SignalModel& model, const TimeGrid& grid,
                                  int k, std::size_t node_s, std::size_t node_t,
                                  std::size_t cells_per_step) {
  if (!model.is_diagonal()) {
    throw std::logic_error("continuous_mode_covariance: needs a diagonal model");
  }
  if (k < 1 || k > model.n_modes()) {
    throw std::out_of_range("continuous_mode_covariance: mode index out of range");
  }
  const std::size_t n = static_cast<std::size_t>(grid.steps());
  if (node_s > n || node_t > n) {
    throw std::out_of_range("continuous_mode_covariance: node index out of range");
  }
  if (cells_per_step < 16) {
    throw std::invalid_argument("continuous_mode_covariance: need at least 16 cells per step");
  }
  if (node_s > node_t) std::swap(node_s, node_t);
  if (node_s == 0) return 0.0;

  const double s = grid.node(static_cast<int>(node_s));
  const double t = grid.node(static_cast<int>(node_t));
  const double lambda = model.lambda(k);
  const double gain = model.gains()[static_cast<Eigen::Index>(k - 1)];
  const double w = grid.dt() / static_cast<double>(cells_per_step);
  const std::size_t ms = node_s * cells_per_step;
  const std::size_t mt = node_t * cells_per_step;

  if (model.kernel().kind() == KernelKind::kBrownian) {
    // White driving noise collapses the double integral onto the diagonal.
    double acc = 0.0;
    for (std::size_t i = 0; i < ms; ++i) {
      const double r = (static_cast<double>(i) + 0.5) * w;
      acc += std::exp(-lambda * (s - r)) * std::exp(-lambda * (t - r));
    }
    return gain * gain * acc * w;
  }

  const double hurst = model.kernel().hurst();
  std::vector<double> er(ms), ev(mt);
  for (std::size_t i = 0; i < ms; ++i) {
    er[i] = std::exp(-lambda * (s - (static_cast<double>(i) + 0.5) * w));
  }
  for (std::size_t j = 0; j < mt; ++j) {
    ev[j] = std::exp(-lambda * (t - (static_cast<double>(j) + 0.5) * w));
  }
  // Midpoint masses of |r - v|^{2h-2} w^2 depend on the index offset only.
  std::vector<double> far_mass(mt, 0.0);
  for (std::size_t d = 2; d < mt; ++d) {
    far_mass[d] = phi_h(hurst, static_cast<double>(d) * w, 0.0) * w * w;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < ms; ++i) {
    const double a1 = static_cast<double>(i) * w;
    for (std::size_t j = 0; j < mt; ++j) {
      const std::size_t d = i >= j ? i - j : j - i;
      double mass;
      if (d <= 1) {
        // Cell pairs meeting the r = v line get the exact singular mass.
        const double a2 = static_cast<double>(j) * w;
        mass = phi_h_box_integral(hurst, a1, a1 + w, a2, a2 + w);
      } else {
        mass = far_mass[d];
      }
      acc += er[i] * ev[j] * mass;
    }
  }
  return gain * gain * acc;
}

}  // namespace gvf
