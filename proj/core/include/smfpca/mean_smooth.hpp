#pragma once

#include "smfpca/dataset.hpp"
#include "smfpca/grid_basis.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace smfpca {

/// Penalized spline estimate of a variable's mean function.
struct MeanModel {
  BasisSystem basis;
  Eigen::VectorXd coeffs;
  double smoothing = 0.0;  ///< selected roughness penalty weight

  double evaluate(double t) const;
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& t) const;
};

/// Smoothing ladder searched by generalized cross-validation.
std::vector<double> mean_smoothing_ladder();

/// Fits y ~ mean(t) by penalized least squares over pooled observations.
/// B-splines use a second-difference coefficient penalty; Fourier bases
/// penalize frequency k by k^4. Both leave constants unpenalized.
/// Throws InsufficientData with fewer distinct times than basis functions.
MeanModel fit_mean(std::span<const double> t, std::span<const double> y, const BasisSystem& basis);

/// Pools every subject's observations of one variable.
MeanModel fit_mean(const UnivariateSample& sample, const BasisSystem& basis);

/// A mean model that is identically zero on the basis domain.
MeanModel zero_mean(const BasisSystem& basis);

/// Replaces every observation y by y - mean(t). Throws MissingModel when
/// a variable has no mean model.
SparseDataset center(const SparseDataset& data, const std::vector<MeanModel>& means);

}  // namespace smfpca
