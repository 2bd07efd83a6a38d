#ifndef GVF_FILTER_ENGINE_HPP
#define GVF_FILTER_ENGINE_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gvf/observation.hpp"
#include "gvf/signal_covariance.hpp"
#include "gvf/signal_model.hpp"
#include "gvf/time_grid.hpp"

namespace gvf {

// Discretised filtering kernel on the triangle 0 <= l <= i <= steps.  Entry
// (j, i, l) is a field (n_modes coefficients): the kernel that weighs the
// channel-j observation increment at node l inside the estimate at node i.
// Off-triangle access is rejected, never reflected: the kernel is defined
// for t >= s only, and the error covariance reads the diagonal
//   P(i)_{pq} = evaluate entry (q, i, i) at z_p.
class TriangularKernelTable {
 public:
  TriangularKernelTable(int channels, int steps, int n_modes);

  int channels() const { return channels_; }
  int steps() const { return steps_; }
  int n_modes() const { return n_modes_; }

  double* field(int j, std::size_t i, std::size_t l) {
    return data_[static_cast<std::size_t>(check_channel(j))].data() + offset(i, l);
  }
  const double* field(int j, std::size_t i, std::size_t l) const {
    return data_[static_cast<std::size_t>(check_channel(j))].data() + offset(i, l);
  }
  Eigen::Map<const Eigen::VectorXd> field_vector(int j, std::size_t i, std::size_t l) const {
    return {field(j, i, l), n_modes_};
  }

  // P(i): symmetric PSD matrix of size channels x channels (up to the O(dt)
  // quadrature defect of the recursion).
  Eigen::MatrixXd error_covariance(const ObservationModel& obs, std::size_t node) const;

  // raw per-channel storage, packed (i (i+1) / 2 + l) * n_modes; used by IO
  const std::vector<double>& channel_data(int j) const {
    return data_[static_cast<std::size_t>(check_channel(j))];
  }
  std::vector<double>& channel_data(int j) {
    return data_[static_cast<std::size_t>(check_channel(j))];
  }

 private:
  std::size_t offset(std::size_t i, std::size_t l) const;
  int check_channel(int j) const;

  int channels_;
  int steps_;
  int n_modes_;
  std::vector<std::vector<double>> data_;
};

struct SolveReport {
  // nodes whose error-covariance matrix has an eigenvalue below -1e-6;
  // reported, never fatal (the recursion is only O(dt) accurate)
  std::vector<int> flagged_nodes;
  // sup over the table of coefficient changes between adjacent nodes in
  // either index; a discrete stand-in for continuity of the kernel
  double max_adjacent_difference = 0.0;
};

// Solves the covariance equation
//   k(j, i, l) = slice(j, i, l) - sum_{j'} sum_{r<l} dt * eval_{z_j} k(j', l, r) * k(j', i, r)
// by the forward sweep in l; left-rectangle weights keep every step explicit.
// slice(j, i, l) = E[theta_{t_l}(z_j) theta_{t_i}] comes from the discrete
// covariance tables.
TriangularKernelTable solve_covariance_equation(const SignalCovariance& cov,
                                                const ObservationModel& obs,
                                                SolveReport* report = nullptr);

// Convenience overload: builds the kernel/covariance tables internally.
TriangularKernelTable solve_covariance_equation(const SignalModel& model,
                                                const ObservationModel& obs,
                                                const TimeGrid& grid,
                                                SolveReport* report = nullptr);

// Thrown when the fixed-point iteration fails to reach tol.
class PicardDivergence : public std::runtime_error {
 public:
  PicardDivergence(const std::string& what, double last_gap)
      : std::runtime_error(what), last_gap_(last_gap) {}
  double last_gap() const { return last_gap_; }

 private:
  double last_gap_;
};

struct PicardResult {
  TriangularKernelTable table;
  std::vector<double> gaps;  // successive sup-norm gaps, one per iteration
  int iterations = 0;
};

// Fixed-point version of the same equation, iterated from the covariance
// slice with trapezoid weights (endpoints dt/2, interior dt; the r = l term
// participates).  Converges geometrically to the trapezoid-weighted solution,
// which differs from the forward-sweep table by the quadrature gap O(dt) —
// agreement of the two is a constructive uniqueness check.
PicardResult solve_covariance_picard(const SignalCovariance& cov, const ObservationModel& obs,
                                     int max_iter = 30, double tol = 1e-10);

// Sup-norm residual of a table under the trapezoid-weighted equation.  For
// the forward-sweep table this measures the quadrature defect, O(dt).
double equation_residual(const TriangularKernelTable& table, const SignalCovariance& cov,
                         const ObservationModel& obs);

struct FilterRun {
  Eigen::MatrixXd estimates;              // (steps+1) x n_modes, hat theta at each node
  Eigen::MatrixXd innovation_increments;  // steps x channels: Dxi_l - A hat theta_l dt
};

// Runs the estimate recursion along one observation path ((steps+1) x
// channels, starting at zero):
//   hat theta_i = sum_j sum_{l<i} k(j, i, l) (Dxi^j_l - hat theta_l(z_j) dt).
FilterRun run_filter(const TriangularKernelTable& table, const ObservationModel& obs,
                     const Eigen::MatrixXd& observation_path, const TimeGrid& grid);

// W~_{t_i} = xi_{t_i} - sum_{l<i} A hat theta_{t_l} dt: the innovation path,
// a standard Wiener process under the model.  estimates is the (steps+1) x
// n_modes output of run_filter.
Eigen::MatrixXd innovation_path(const Eigen::MatrixXd& observation_path,
                                const Eigen::MatrixXd& estimates, const ObservationModel& obs,
                                const TimeGrid& grid);

struct StreamingFilterResult {
  FilterRun run;
  std::vector<Eigen::MatrixXd> error_covariance;  // P(i) for every node
};

// Fused solve + filter that keeps only the current table row (plus the
// scalar evaluation cache) in memory: the footprint drops from
// channels * steps^2/2 * n_modes to channels^2 * steps^2/2 reals.  Produces
// bit-identical estimates to solve + run_filter.
StreamingFilterResult run_filter_streaming(const SignalCovariance& cov,
                                           const ObservationModel& obs,
                                           const Eigen::MatrixXd& observation_path);

}  // namespace gvf

#endif
