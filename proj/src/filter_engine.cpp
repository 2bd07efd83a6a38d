#include "gvf/filter_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace gvf {

TriangularKernelTable::TriangularKernelTable(int channels, int steps, int n_modes)
    : channels_(channels), steps_(steps), n_modes_(n_modes) {
  if (channels < 1 || steps < 1 || n_modes < 1) {
    throw std::invalid_argument("TriangularKernelTable: sizes must be positive");
  }
  const std::size_t pairs =
      (static_cast<std::size_t>(steps) + 1) * (static_cast<std::size_t>(steps) + 2) / 2;
  const std::size_t bytes = 8 * pairs * static_cast<std::size_t>(channels) *
                            static_cast<std::size_t>(n_modes);
  if (bytes > 6'000'000'000ull) {
    throw std::invalid_argument("TriangularKernelTable: table would need " +
                                std::to_string(bytes / 1'000'000) +
                                " MB; use the streaming filter or reduce steps");
  }
  data_.assign(static_cast<std::size_t>(channels),
               std::vector<double>(pairs * static_cast<std::size_t>(n_modes), 0.0));
}

std::size_t TriangularKernelTable::offset(std::size_t i, std::size_t l) const {
  if (i > static_cast<std::size_t>(steps_) || l > i) {
    throw std::out_of_range("TriangularKernelTable: off-triangle access");
  }
  return (i * (i + 1) / 2 + l) * static_cast<std::size_t>(n_modes_);
}

int TriangularKernelTable::check_channel(int j) const {
  if (j < 0 || j >= channels_) {
    throw std::out_of_range("TriangularKernelTable: channel index out of range");
  }
  return j;
}

Eigen::MatrixXd TriangularKernelTable::error_covariance(const ObservationModel& obs,
                                                        std::size_t node) const {
  if (obs.channels() != channels_ || obs.n_modes() != n_modes_) {
    throw std::invalid_argument("TriangularKernelTable: observation shape mismatch");
  }
  Eigen::MatrixXd p(channels_, channels_);
  for (int q = 0; q < channels_; ++q) {
    const double* f = field(q, node, node);
    for (int pc = 0; pc < channels_; ++pc) p(pc, q) = obs.apply(pc, f);
  }
  return p;
}

namespace {

// dst[k] -= dt * sum_{j'} sum_{r<l} evals_j[j'路l + r] * row_{j'}[r*nm + k].
// Both solver paths funnel through here with identical operand order, which
// is what makes streaming output bit-identical to the sweep.
inline void apply_integral_term(double* dst, const double* evals_j, int nch, std::size_t l,
                                const double* const* rows_i, int nm, double dt) {
  for (int jp = 0; jp < nch; ++jp) {
    const double* e = evals_j + static_cast<std::size_t>(jp) * l;
    const double* row = rows_i[jp];
    for (std::size_t r = 0; r < l; ++r) {
      const double c = dt * e[r];
      const double* src = row + r * static_cast<std::size_t>(nm);
      for (int k = 0; k < nm; ++k) dst[k] -= c * src[k];
    }
  }
}

// evals[(j*nch + jp)*count + r] = channel-j evaluation of the (jp, row, r)
// field, r < count.
void build_eval_slab(std::vector<double>& evals, const ObservationModel& obs,
                     const double* const* row_fields, int nch, std::size_t count, int nm) {
  evals.resize(static_cast<std::size_t>(nch) * nch * count);
  for (int j = 0; j < nch; ++j) {
    for (int jp = 0; jp < nch; ++jp) {
      double* out = evals.data() + (static_cast<std::size_t>(j) * nch + jp) * count;
      const double* row = row_fields[jp];
      for (std::size_t r = 0; r < count; ++r) {
        out[r] = obs.apply(j, row + r * static_cast<std::size_t>(nm));
      }
    }
  }
}

void check_shapes(const SignalCovariance& cov, const ObservationModel& obs) {
  if (obs.n_modes() != cov.model().n_modes()) {
    throw std::invalid_argument("filter engine: observation/model mode count mismatch");
  }
}

void fill_report(SolveReport* report, const TriangularKernelTable& table,
                 const ObservationModel& obs) {
  if (report == nullptr) return;
  report->flagged_nodes.clear();
  report->max_adjacent_difference = 0.0;
  const int steps = table.steps();
  const int nm = table.n_modes();
  for (int node = 0; node <= steps; ++node) {
    const Eigen::MatrixXd p = table.error_covariance(obs, static_cast<std::size_t>(node));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (p + p.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-6) report->flagged_nodes.push_back(node);
  }
  double md = 0.0;
  for (int j = 0; j < table.channels(); ++j) {
    for (std::size_t i = 0; i <= static_cast<std::size_t>(steps); ++i) {
      for (std::size_t l = 0; l <= i; ++l) {
        const double* f = table.field(j, i, l);
        if (i + 1 <= static_cast<std::size_t>(steps)) {
          const double* up = table.field(j, i + 1, l);
          for (int k = 0; k < nm; ++k) md = std::max(md, std::fabs(up[k] - f[k]));
        }
        if (l + 1 <= i) {
          const double* right = table.field(j, i, l + 1);
          for (int k = 0; k < nm; ++k) md = std::max(md, std::fabs(right[k] - f[k]));
        }
      }
    }
  }
  report->max_adjacent_difference = md;
}

}  // namespace

TriangularKernelTable solve_covariance_equation(const SignalCovariance& cov,
                                                const ObservationModel& obs,
                                                SolveReport* report) {
  check_shapes(cov, obs);
  const int steps = cov.grid().steps();
  const int nch = obs.channels();
  const int nm = obs.n_modes();
  const double dt = cov.grid().dt();

  TriangularKernelTable table(nch, steps, nm);
  for (int j = 0; j < nch; ++j) {
    for (std::size_t i = 0; i <= static_cast<std::size_t>(steps); ++i) {
      for (std::size_t l = 0; l <= i; ++l) {
        cov.field_mode_slice(obs, static_cast<std::size_t>(j), i, l, table.field(j, i, l));
      }
    }
  }

  std::vector<double> evals;
  std::vector<const double*> rows(static_cast<std::size_t>(nch));
  std::vector<const double*> row_l(static_cast<std::size_t>(nch));
  for (std::size_t l = 1; l <= static_cast<std::size_t>(steps); ++l) {
    for (int jp = 0; jp < nch; ++jp) row_l[static_cast<std::size_t>(jp)] = table.field(jp, l, 0);
    build_eval_slab(evals, obs, row_l.data(), nch, l, nm);
    for (std::size_t i = l; i <= static_cast<std::size_t>(steps); ++i) {
      for (int jp = 0; jp < nch; ++jp) rows[static_cast<std::size_t>(jp)] = table.field(jp, i, 0);
      for (int j = 0; j < nch; ++j) {
        apply_integral_term(table.field(j, i, l),
                            evals.data() + static_cast<std::size_t>(j) * nch * l, nch, l,
                            rows.data(), nm, dt);
      }
    }
  }
  fill_report(report, table, obs);
  return table;
}

TriangularKernelTable solve_covariance_equation(const SignalModel& model,
                                                const ObservationModel& obs,
                                                const TimeGrid& grid, SolveReport* report) {
  const KernelStepTable kernel_table(model.kernel(), grid);
  const SignalCovariance cov(model, kernel_table);
  return solve_covariance_equation(cov, obs, report);
}

PicardResult solve_covariance_picard(const SignalCovariance& cov, const ObservationModel& obs,
                                     int max_iter, double tol) {
  check_shapes(cov, obs);
  if (max_iter < 1) throw std::invalid_argument("solve_covariance_picard: max_iter must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_covariance_picard: tol must be positive");
  const int steps = cov.grid().steps();
  const int nch = obs.channels();
  const int nm = obs.n_modes();
  const double dt = cov.grid().dt();

  TriangularKernelTable slices(nch, steps, nm);
  for (int j = 0; j < nch; ++j) {
    for (std::size_t i = 0; i <= static_cast<std::size_t>(steps); ++i) {
      for (std::size_t l = 0; l <= i; ++l) {
        cov.field_mode_slice(obs, static_cast<std::size_t>(j), i, l, slices.field(j, i, l));
      }
    }
  }

  TriangularKernelTable cur = slices;
  TriangularKernelTable next(nch, steps, nm);
  std::vector<double> gaps;
  std::vector<double> evals;
  std::vector<const double*> rows(static_cast<std::size_t>(nch));
  std::vector<const double*> row_l(static_cast<std::size_t>(nch));

  for (int it = 1; it <= max_iter; ++it) {
    double gap = 0.0;
    for (std::size_t l = 0; l <= static_cast<std::size_t>(steps); ++l) {
      if (l >= 1) {
        for (int jp = 0; jp < nch; ++jp) {
          row_l[static_cast<std::size_t>(jp)] = cur.field(jp, l, 0);
        }
        build_eval_slab(evals, obs, row_l.data(), nch, l + 1, nm);  // r = 0..l inclusive
      }
      for (std::size_t i = l; i <= static_cast<std::size_t>(steps); ++i) {
        for (int jp = 0; jp < nch; ++jp) rows[static_cast<std::size_t>(jp)] = cur.field(jp, i, 0);
        for (int j = 0; j < nch; ++j) {
          double* dst = next.field(j, i, l);
          const double* base = slices.field(j, i, l);
          for (int k = 0; k < nm; ++k) dst[k] = base[k];
          if (l >= 1) {
            // trapezoid weights on [0, t_l]: dt/2 at the endpoints r = 0, l
            const double* ej = evals.data() + static_cast<std::size_t>(j) * nch * (l + 1);
            for (int jp = 0; jp < nch; ++jp) {
              const double* e = ej + static_cast<std::size_t>(jp) * (l + 1);
              const double* row = rows[static_cast<std::size_t>(jp)];
              for (std::size_t r = 0; r <= l; ++r) {
                const double w = (r == 0 || r == l) ? 0.5 * dt : dt;
                const double c = w * e[r];
                const double* src = row + r * static_cast<std::size_t>(nm);
                for (int k = 0; k < nm; ++k) dst[k] -= c * src[k];
              }
            }
          }
          const double* old = cur.field(j, i, l);
          for (int k = 0; k < nm; ++k) gap = std::max(gap, std::fabs(dst[k] - old[k]));
        }
      }
    }
    std::swap(cur, next);
    gaps.push_back(gap);
    if (gap < tol) {
      return {std::move(cur), std::move(gaps), it};
    }
  }
  throw PicardDivergence("solve_covariance_picard: no convergence within " +
                             std::to_string(max_iter) + " iterations; last gap " +
                             std::to_string(gaps.back()),
                         gaps.back());
}

double equation_residual(const TriangularKernelTable& table, const SignalCovariance& cov,
                         const ObservationModel& obs) {
  check_shapes(cov, obs);
  if (table.steps() != cov.grid().steps() || table.channels() != obs.channels() ||
      table.n_modes() != obs.n_modes()) {
    throw std::invalid_argument("equation_residual: table shape mismatch");
  }
  const int steps = table.steps();
  const int nch = table.channels();
  const int nm = table.n_modes();
  const double dt = cov.grid().dt();

  double sup = 0.0;
  std::vector<double> slice(static_cast<std::size_t>(nm));
  std::vector<double> res(static_cast<std::size_t>(nm));
  std::vector<double> evals;
  std::vector<const double*> row_l(static_cast<std::size_t>(nch));
  for (std::size_t l = 0; l <= static_cast<std::size_t>(steps); ++l) {
    if (l >= 1) {
      for (int jp = 0; jp < nch; ++jp) row_l[static_cast<std::size_t>(jp)] = table.field(jp, l, 0);
      build_eval_slab(evals, obs, row_l.data(), nch, l + 1, nm);
    }
    for (std::size_t i = l; i <= static_cast<std::size_t>(steps); ++i) {
      for (int j = 0; j < nch; ++j) {
        cov.field_mode_slice(obs, static_cast<std::size_t>(j), i, l, slice.data());
        const double* f = table.field(j, i, l);
        for (int k = 0; k < nm; ++k) res[static_cast<std::size_t>(k)] = f[k] - slice[static_cast<std::size_t>(k)];
        if (l >= 1) {
          const double* ej = evals.data() + static_cast<std::size_t>(j) * nch * (l + 1);
          for (int jp = 0; jp < nch; ++jp) {
            const double* e = ej + static_cast<std::size_t>(jp) * (l + 1);
            const double* row = table.field(jp, i, 0);
            for (std::size_t r = 0; r <= l; ++r) {
              const double w = (r == 0 || r == l) ? 0.5 * dt : dt;
              const double c = w * e[r];
              const double* src = row + r * static_cast<std::size_t>(nm);
              for (int k = 0; k < nm; ++k) res[static_cast<std::size_t>(k)] += c * src[k];
            }
          }
        }
        for (int k = 0; k < nm; ++k) sup = std::max(sup, std::fabs(res[static_cast<std::size_t>(k)]));
      }
    }
  }
  return sup;
}

namespace {

// hat theta_i = sum_j sum_{l<i} field(j, i, l) * nu(l, j); shared by both
// filter paths (operand order matters for bit-identity).
void accumulate_estimate(double* theta, int nm, int nch, std::size_t i,
                         const double* const* rows_i, const Eigen::MatrixXd& innovations) {
  for (int k = 0; k < nm; ++k) theta[k] = 0.0;
  for (int j = 0; j < nch; ++j) {
    const double* row = rows_i[j];
    for (std::size_t l = 0; l < i; ++l) {
      const double c = innovations(static_cast<Eigen::Index>(l), j);
      const double* src = row + l * static_cast<std::size_t>(nm);
      for (int k = 0; k < nm; ++k) theta[k] += c * src[k];
    }
  }
}

}  // namespace

FilterRun run_filter(const TriangularKernelTable& table, const ObservationModel& obs,
                     const Eigen::MatrixXd& observation_path, const TimeGrid& grid) {
  const int steps = table.steps();
  const int nch = table.channels();
  const int nm = table.n_modes();
  if (grid.steps() != steps) throw std::invalid_argument("run_filter: grid/table step mismatch");
  if (obs.channels() != nch || obs.n_modes() != nm) {
    throw std::invalid_argument("run_filter: observation shape mismatch");
  }
  if (observation_path.rows() != steps + 1 || observation_path.cols() != nch) {
    throw std::invalid_argument("run_filter: observation path shape mismatch");
  }
  const double dt = grid.dt();

  FilterRun out;
  out.estimates = Eigen::MatrixXd::Zero(steps + 1, nm);
  out.innovation_increments.resize(steps, nch);
  std::vector<double> theta(static_cast<std::size_t>(nm), 0.0);
  std::vector<const double*> rows(static_cast<std::size_t>(nch));
  for (std::size_t i = 0; i <= static_cast<std::size_t>(steps); ++i) {
    if (i > 0) {
      for (int j = 0; j < nch; ++j) rows[static_cast<std::size_t>(j)] = table.field(j, i, 0);
      accumulate_estimate(theta.data(), nm, nch, i, rows.data(), out.innovation_increments);
      for (int k = 0; k < nm; ++k) out.estimates(static_cast<Eigen::Index>(i), k) = theta[static_cast<std::size_t>(k)];
    } else {
      std::fill(theta.begin(), theta.end(), 0.0);
    }
    if (i < static_cast<std::size_t>(steps)) {
      for (int j = 0; j < nch; ++j) {
        const double dxi = observation_path(static_cast<Eigen::Index>(i) + 1, j) -
                           observation_path(static_cast<Eigen::Index>(i), j);
        out.innovation_increments(static_cast<Eigen::Index>(i), j) =
            dxi - dt * obs.apply(j, theta.data());
      }
    }
  }
  return out;
}

Eigen::MatrixXd innovation_path(const Eigen::MatrixXd& observation_path,
                                const Eigen::MatrixXd& estimates, const ObservationModel& obs,
                                const TimeGrid& grid) {
  const int steps = grid.steps();
  const int nch = obs.channels();
  if (observation_path.rows() != steps + 1 || estimates.rows() != steps + 1) {
    throw std::invalid_argument("innovation_path: node count mismatch");
  }
  if (observation_path.cols() != nch || estimates.cols() != obs.n_modes()) {
    throw std::invalid_argument("innovation_path: shape mismatch");
  }
  const double dt = grid.dt();
  Eigen::MatrixXd w(steps + 1, nch);
  w.row(0) = observation_path.row(0);
  Eigen::VectorXd drift = Eigen::VectorXd::Zero(nch);
  std::vector<double> theta(static_cast<std::size_t>(obs.n_modes()));
  for (int i = 0; i < steps; ++i) {
    for (int k = 0; k < obs.n_modes(); ++k) theta[static_cast<std::size_t>(k)] = estimates(i, k);
    for (int j = 0; j < nch; ++j) drift(j) += dt * obs.apply(j, theta.data());
    w.row(i + 1) = observation_path.row(i + 1) - drift.transpose();
  }
  return w;
}

StreamingFilterResult run_filter_streaming(const SignalCovariance& cov,
                                           const ObservationModel& obs,
                                           const Eigen::MatrixXd& observation_path) {
  check_shapes(cov, obs);
  const int steps = cov.grid().steps();
  const int nch = obs.channels();
  const int nm = obs.n_modes();
  if (observation_path.rows() != steps + 1 || observation_path.cols() != nch) {
    throw std::invalid_argument("run_filter_streaming: observation path shape mismatch");
  }
  const std::size_t cache_bytes = 8 * static_cast<std::size_t>(nch) * nch *
                                  (static_cast<std::size_t>(steps) + 1) *
                                  (static_cast<std::size_t>(steps) + 2) / 2;
  if (cache_bytes > 6'000'000'000ull) {
    throw std::invalid_argument("run_filter_streaming: evaluation cache would exceed memory");
  }
  const double dt = cov.grid().dt();

  StreamingFilterResult out;
  out.run.estimates = Eigen::MatrixXd::Zero(steps + 1, nm);
  out.run.innovation_increments.resize(steps, nch);
  out.error_covariance.reserve(static_cast<std::size_t>(steps) + 1);

  std::vector<std::vector<double>> eval_cache(static_cast<std::size_t>(steps) + 1);
  std::vector<std::vector<double>> row(static_cast<std::size_t>(nch),
                                       std::vector<double>((static_cast<std::size_t>(steps) + 1) *
                                                           static_cast<std::size_t>(nm)));
  std::vector<const double*> rows(static_cast<std::size_t>(nch));
  std::vector<double> theta(static_cast<std::size_t>(nm), 0.0);

  for (std::size_t i = 0; i <= static_cast<std::size_t>(steps); ++i) {
    for (int jp = 0; jp < nch; ++jp) rows[static_cast<std::size_t>(jp)] = row[static_cast<std::size_t>(jp)].data();
    for (int j = 0; j < nch; ++j) {
      double* r = row[static_cast<std::size_t>(j)].data();
      for (std::size_t l = 0; l <= i; ++l) {
        cov.field_mode_slice(obs, static_cast<std::size_t>(j), i, l,
                             r + l * static_cast<std::size_t>(nm));
      }
    }
    for (std::size_t l = 1; l <= i; ++l) {
      // row l was cached when it was live; the diagonal step l == i uses the
      // entries of the current row finalized just above, matching the sweep.
      if (l == i) build_eval_slab(eval_cache[i], obs, rows.data(), nch, i, nm);
      const std::vector<double>& evals = eval_cache[l];
      for (int j = 0; j < nch; ++j) {
        apply_integral_term(row[static_cast<std::size_t>(j)].data() + l * static_cast<std::size_t>(nm),
                            evals.data() + static_cast<std::size_t>(j) * nch * l, nch, l,
                            rows.data(), nm, dt);
      }
    }
    Eigen::MatrixXd p(nch, nch);
    for (int q = 0; q < nch; ++q) {
      const double* f = row[static_cast<std::size_t>(q)].data() + i * static_cast<std::size_t>(nm);
      for (int pc = 0; pc < nch; ++pc) p(pc, q) = obs.apply(pc, f);
    }
    out.error_covariance.push_back(std::move(p));

    if (i > 0) {
      accumulate_estimate(theta.data(), nm, nch, i, rows.data(), out.run.innovation_increments);
      for (int k = 0; k < nm; ++k) {
        out.run.estimates(static_cast<Eigen::Index>(i), k) = theta[static_cast<std::size_t>(k)];
      }
    } else {
      std::fill(theta.begin(), theta.end(), 0.0);
    }
    if (i < static_cast<std::size_t>(steps)) {
      for (int j = 0; j < nch; ++j) {
        const double dxi = observation_path(static_cast<Eigen::Index>(i) + 1, j) -
                           observation_path(static_cast<Eigen::Index>(i), j);
        out.run.innovation_increments(static_cast<Eigen::Index>(i), j) =
            dxi - dt * obs.apply(j, theta.data());
      }
    }
  }
  return out;
}

}  // namespace gvf
