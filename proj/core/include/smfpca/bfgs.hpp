#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace smfpca {

struct BfgsOptions {
  double grad_tol = 1e-6;     ///< stop when the gradient infinity-norm falls below this
  double f_tol = 1e-10;       ///< stop when one step decreases f by less than f_tol * max(1, |f|)
  int max_iterations = 500;
  double c1 = 1e-4;           ///< sufficient-decrease constant
  double c2 = 0.9;            ///< curvature constant (strong Wolfe)
  int max_line_search = 40;   ///< trial steps per line search
};

enum class BfgsStatus { GradientConverged, ObjectiveConverged, MaxIterations, LineSearchFailed };

std::string to_string(BfgsStatus status);

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  BfgsStatus status = BfgsStatus::MaxIterations;
  std::vector<double> trace;  ///< objective after each accepted step, starting with f(x0)
};

/// Returns f(x) and writes the gradient into `grad` (already sized).
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Quasi-Newton minimization with a cubic-interpolation line search that
/// enforces the strong Wolfe conditions. Throws DivergedError if f(x0)
/// is not finite. A line-search failure is reported through `status`
/// with the best point reached.
BfgsResult minimize_bfgs(const ObjectiveFn& objective, Eigen::VectorXd x0, const BfgsOptions& options = {});

}  // namespace smfpca
