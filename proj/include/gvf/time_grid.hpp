#ifndef GVF_TIME_GRID_HPP
#define GVF_TIME_GRID_HPP

#include <stdexcept>

namespace gvf {

// Uniform grid t_i = i * T / n on [0, T].  Node indices run 0..n inclusive,
// step indices 0..n-1.  All discrete-time objects in the library share one
// TimeGrid so that solver, simulator, and reference computations agree on
// node placement.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  }

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double dt() const { return horizon_ / steps_; }

  // Node t_i, 0 <= i <= steps.
  double node(int i) const {
    check_node(i);
    return horizon_ * static_cast<double>(i) / steps_;
  }

  // Midpoint of step l, i.e. (t_l + t_{l+1}) / 2.  Strictly inside (0, T].
  double midpoint(int l) const {
    check_step(l);
    return horizon_ * (static_cast<double>(l) + 0.5) / steps_;
  }

 private:
  void check_node(int i) const {
    if (i < 0 || i > steps_) throw std::out_of_range("TimeGrid: node index out of range");
  }
  void check_step(int l) const {
    if (l < 0 || l >= steps_) throw std::out_of_range("TimeGrid: step index out of range");
  }

  double horizon_;
  int steps_;
};

}  // namespace gvf

#endif
