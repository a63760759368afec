#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace smfpca {

/// Root mean squared difference over every entry of two assembled
/// covariance matrices on the stacked evaluation grid.
double rmse_cov(const Eigen::Ref<const Eigen::MatrixXd>& estimate, const Eigen::Ref<const Eigen::MatrixXd>& truth);

/// Sign-invariant RMSE of a stacked eigenfunction:
/// min(rmse(est - truth), rmse(est + truth)).
double rmse_eigenfunction(const Eigen::Ref<const Eigen::VectorXd>& estimate,
                          const Eigen::Ref<const Eigen::VectorXd>& truth);

/// (estimate - truth)^2 / truth^2. Throws InvalidArgument when truth is 0.
double rse_eigenvalue(double estimate, double truth);

/// RMSE over subjects (rows) and stacked grid points (columns) of
/// centered curve reconstructions.
double rmse_reconstruction(const Eigen::Ref<const Eigen::MatrixXd>& estimate,
                           const Eigen::Ref<const Eigen::MatrixXd>& truth);

/// Sample quantile with linear interpolation between order statistics
/// (h = (n - 1) p). Throws InvalidArgument on empty input or p outside [0, 1].
double quantile(std::vector<double> values, double p);

struct Summary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;  ///< q3 - q1
  std::size_t count = 0;
};

Summary summarize(const std::vector<double>& values);

}  // namespace smfpca
