#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "gvf/quadrature.hpp"
#include "gvf/time_grid.hpp"
#include "gvf/volterra_kernel.hpp"

namespace {

// Reference value of the fractional kernel, recomputed from scratch: the
// normalization from log-gammas and the desingularized integral evaluated
// with a fixed-grid midpoint rule at 10^6 cells (no adaptive machinery).
double fbm_kernel_reference(double h, double t, double s) {
  const double a = h - 0.5;
  const double log_beta = std::lgamma(2.0 - 2.0 * h) + std::lgamma(h - 0.5) - std::lgamma(1.5 - h);
  const double c = std::sqrt(h * (2.0 * h - 1.0) / std::exp(log_beta));
  const double upper = std::pow(t - s, a);
  const auto f = [&](double v) { return std::pow(1.0 + std::pow(v, 1.0 / a) / s, a); };
  return c / a * gvf::midpoint_rule(f, 0.0, upper, 1000000);
}

double fbm_covariance_closed_form(double h, double s, double t) {
  return 0.5 * (std::pow(s, 2.0 * h) + std::pow(t, 2.0 * h) - std::pow(std::abs(t - s), 2.0 * h));
}

}  // namespace

TEST_CASE("time grid nodes, midpoints, and bounds") {
  gvf::TimeGrid grid(2.0, 4);
  CHECK(grid.dt() == doctest::Approx(0.5));
  CHECK(grid.node(0) == 0.0);
  CHECK(grid.node(4) == doctest::Approx(2.0));
  CHECK(grid.midpoint(0) == doctest::Approx(0.25));
  CHECK(grid.midpoint(3) == doctest::Approx(1.75));
  CHECK_THROWS_AS(grid.node(5), std::out_of_range);
  CHECK_THROWS_AS(grid.midpoint(4), std::out_of_range);
  CHECK_THROWS_AS(gvf::TimeGrid(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(gvf::TimeGrid(1.0, 0), std::invalid_argument);
}

TEST_CASE("adaptive Simpson on known integrals") {
  CHECK(gvf::adaptive_simpson([](double x) { return std::sin(x); }, 0.0, M_PI) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(gvf::adaptive_simpson([](double x) { return std::exp(-x); }, 0.0, 20.0) ==
        doctest::Approx(1.0 - std::exp(-20.0)).epsilon(1e-10));
  CHECK(gvf::midpoint_rule([](double x) { return x * x; }, 0.0, 1.0, 2000) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("Brownian kernel is the indicator of s <= t") {
  const auto k = gvf::VolterraKernel::brownian();
  CHECK(k.evaluate(1.0, 0.5) == 1.0);
  CHECK(k.evaluate(1.0, 0.0) == 1.0);
  CHECK(k.evaluate(0.5, 0.5) == 1.0);
  CHECK(k.evaluate(0.0, 0.0) == 0.0);
  CHECK(k.alpha() == 0.5);
  CHECK_THROWS_AS(k.evaluate(0.5, 1.0), std::domain_error);
}

TEST_CASE("fractional kernel domain and degenerate values") {
  const auto k = gvf::VolterraKernel::fractional(0.75);
  CHECK(k.alpha() == doctest::Approx(0.25));
  CHECK(k.evaluate(0.3, 0.3) == 0.0);
  CHECK_THROWS_AS(k.evaluate(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(k.evaluate(0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(gvf::VolterraKernel::fractional(0.5), std::invalid_argument);
  CHECK_THROWS_AS(gvf::VolterraKernel::fractional(1.0), std::invalid_argument);
  CHECK_THROWS_AS(gvf::VolterraKernel::fractional(0.4), std::invalid_argument);
}

TEST_CASE("fractional kernel value against an independent fixed-grid reference") {
  const auto k = gvf::VolterraKernel::fractional(0.75);
  const double got = k.evaluate(1.0, 0.5);
  const double ref = fbm_kernel_reference(0.75, 1.0, 0.5);
  CHECK(got == doctest::Approx(ref).epsilon(1e-6));

  // A second point with a much smaller s, where the (u/s)^{h-1/2} factor is
  // far from flat.
  const auto k2 = gvf::VolterraKernel::fractional(0.6);
  CHECK(k2.evaluate(0.7, 0.01) == doctest::Approx(fbm_kernel_reference(0.6, 0.7, 0.01)).epsilon(1e-6));
}

TEST_CASE("fractional kernel grows in t for fixed s") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  for (double h : {0.6, 0.75, 0.9}) {
    const auto k = gvf::VolterraKernel::fractional(h);
    for (int trial = 0; trial < 20; ++trial) {
      double s = unif(rng);
      double t1 = s + unif(rng);
      double t2 = t1 + unif(rng);
      CHECK(k.evaluate(t2, s) > k.evaluate(t1, s));
    }
  }
}

TEST_CASE("phi_h point value, symmetry, and diagonal rejection") {
  // h (2h - 1) |lambda - r|^{2h-2} at h = 3/4, |lambda - r| = 1/4 is
  // 0.375 * 2 = 0.75.
  CHECK(gvf::phi_h(0.75, 0.5, 0.25) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(gvf::phi_h(0.6, 0.1, 0.9) == doctest::Approx(gvf::phi_h(0.6, 0.9, 0.1)).epsilon(1e-14));
  CHECK_THROWS_AS(gvf::phi_h(0.75, 0.4, 0.4), std::domain_error);
  CHECK_THROWS_AS(gvf::phi_h(0.5, 0.1, 0.2), std::invalid_argument);
}

TEST_CASE("phi_h integrates to the fBm variance over the unit square") {
  for (double h : {0.6, 0.75, 0.9}) {
    // Reference: integrate the inner variable analytically
    // (int_0^l phi dr = h l^{2h-1} and symmetrically), then the outer one
    // numerically.  Var b_1 = 1 by normalization.
    const auto outer = [h](double l) { return 2.0 * h * std::pow(l, 2.0 * h - 1.0); };
    const double ref = gvf::midpoint_rule(outer, 0.0, 1.0, 1 << 20);
    CHECK(ref == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(gvf::phi_h_box_integral(h, 0.0, 1.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("phi_h box integral matches plain quadrature away from the diagonal") {
  const double h = 0.8;
  const auto f = [h](double lam, double r) { return gvf::phi_h(h, lam, r); };
  // Box [2, 3] x [0, 1] never touches the diagonal.
  double quad = 0.0;
  const int m = 400;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      quad += f(2.0 + (i + 0.5) / m, (j + 0.5) / m) / (m * m);
    }
  }
  CHECK(gvf::phi_h_box_integral(h, 2.0, 3.0, 0.0, 1.0) == doctest::Approx(quad).epsilon(1e-6));
}

TEST_CASE("Brownian covariance reduction is exact") {
  const auto k = gvf::VolterraKernel::brownian();
  CHECK(gvf::scalar_covariance(k, 0.3, 0.7) == 0.3);
  CHECK(gvf::scalar_covariance(k, 0.7, 0.3) == 0.3);
  CHECK(gvf::scalar_covariance(k, 1.0, 1.0) == 1.0);
  CHECK(gvf::scalar_covariance(k, 0.0, 0.5) == 0.0);
}

TEST_CASE("fractional covariance matches the closed form, pinning c_h") {
  // This is the gate for the normalization constant: if c_h were off, the
  // diagonal R(t, t) = t^{2h} could not hold across h.
  const double nodes[5] = {0.2, 0.4, 0.6, 0.8, 1.0};
  for (double h : {0.6, 0.75, 0.9}) {
    const auto k = gvf::VolterraKernel::fractional(h);
    for (double s : nodes) {
      for (double t : nodes) {
        const double got = gvf::scalar_covariance(k, s, t);
        const double want = fbm_covariance_closed_form(h, s, t);
        CHECK(got == doctest::Approx(want).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("scalar covariance is symmetric by construction") {
  const auto k = gvf::VolterraKernel::fractional(0.7);
  CHECK(gvf::scalar_covariance(k, 0.25, 0.9) == gvf::scalar_covariance(k, 0.9, 0.25));
}

TEST_CASE("covariance Gram matrices are positive semidefinite") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int kernel_case = 0; kernel_case < 2; ++kernel_case) {
    const auto k = kernel_case == 0 ? gvf::VolterraKernel::brownian()
                                    : gvf::VolterraKernel::fractional(0.75);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 8;
      std::vector<double> nodes(n);
      for (auto& x : nodes) x = unif(rng);
      Eigen::MatrixXd gram(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
          gram(i, j) = gram(j, i) = gvf::scalar_covariance(k, nodes[i], nodes[j]);
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * gram.trace());
    }
  }
}
