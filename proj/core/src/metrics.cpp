#include "smfpca/metrics.hpp"

#include "smfpca/errors.hpp"

#include <algorithm>
#include <cmath>

namespace smfpca {

namespace {

double rms(const Eigen::Ref<const Eigen::MatrixXd>& diff) {
  if (diff.size() == 0) throw InvalidArgument("cannot take the RMSE of an empty array");
  return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

void same_shape(Eigen::Index r1, Eigen::Index c1, Eigen::Index r2, Eigen::Index c2) {
  if (r1 != r2 || c1 != c2) throw InvalidArgument("estimate and truth differ in shape");
}

}  // namespace

double rmse_cov(const Eigen::Ref<const Eigen::MatrixXd>& estimate, const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  same_shape(estimate.rows(), estimate.cols(), truth.rows(), truth.cols());
  return rms(estimate - truth);
}

double rmse_eigenfunction(const Eigen::Ref<const Eigen::VectorXd>& estimate,
                          const Eigen::Ref<const Eigen::VectorXd>& truth) {
  same_shape(estimate.rows(), 1, truth.rows(), 1);
  return std::min(rms(estimate - truth), rms(estimate + truth));
}

double rse_eigenvalue(double estimate, double truth) {
  if (truth == 0.0) throw InvalidArgument("relative error against a zero eigenvalue");
  const double d = estimate - truth;
  return d * d / (truth * truth);
}

double rmse_reconstruction(const Eigen::Ref<const Eigen::MatrixXd>& estimate,
                           const Eigen::Ref<const Eigen::MatrixXd>& truth) {
  same_shape(estimate.rows(), estimate.cols(), truth.rows(), truth.cols());
  return rms(estimate - truth);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  s.iqr = s.q3 - s.q1;
  return s;
}

}  // namespace smfpca
