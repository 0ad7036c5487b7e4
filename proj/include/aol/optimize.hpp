#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace aol {

// Value-and-gradient callback. Must return finite values at the initial
// point and at accepted iterates; line-search probes that return
// non-finite values are treated as "step too long" and shrunk, so
// overflowing losses (exponential) do not abort a fit.
struct ObjectiveHandle {
  Eigen::Index dimension = 0;
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)> eval;
};

struct SolverOptions {
  int memory = 10;
  int max_iterations = 500;
  // stop when ||grad||_inf <= gradient_tolerance * max(1, ||x||_inf)
  // (projected-gradient analogue for the constrained solvers)
  double gradient_tolerance = 1e-6;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
};

enum class SolveStatus { converged, max_iter };

struct SolveResult {
  Eigen::VectorXd x;
  double f = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
  int evaluations = 0;
};

// Limited-memory quasi-Newton with a strong-Wolfe line search (cubic
// interpolation, initial step 1).
SolveResult lbfgs_minimize(const ObjectiveHandle& obj, const Eigen::VectorXd& x0,
                           const SolverOptions& opts = {});

// Minimizes smooth(x) + l1_weight * sum_{penalized[j]} |x_j| by
// orthant-wise steps: the minimum-norm subgradient replaces the gradient,
// search directions are sign-aligned with it, and coordinates that cross
// zero within a step are projected to zero.
SolveResult pss_minimize(const ObjectiveHandle& smooth_obj, double l1_weight,
                         const std::vector<bool>& penalized, const Eigen::VectorXd& x0,
                         const SolverOptions& opts = {});

// Box-constrained projected limited-memory descent with backtracking;
// convergence is ||P(x - grad) - x||_inf <= gradient_tolerance. Entries of
// lower/upper may be -inf/+inf; lower == upper freezes a coordinate.
SolveResult lbfgsb_minimize(const ObjectiveHandle& obj, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const Eigen::VectorXd& x0,
                            const SolverOptions& opts = {});

// max_j |analytic_j - central_difference_j| / max(1, ||analytic||_inf)
double gradient_check(const ObjectiveHandle& obj, const Eigen::VectorXd& x, double h = 1e-6);

}  // namespace aol
