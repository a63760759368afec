#pragma once

#include "smfpca/dataset.hpp"
#include "smfpca/ufpca.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace smfpca {

/// Per-subject univariate principal component scores for one variable.
struct ScoreMatrix {
  Eigen::MatrixXd values;                ///< n x M
  std::vector<std::string> subject_ids;  ///< aligned with rows
  std::string variable;
  /// Subjects observed fewer times than there are components; their
  /// scores are well defined but heavily shrunk.
  std::vector<bool> underdetermined;
};

/// Best linear predictor E[xi | y] = Lambda Phi_i^T C_i^{-1} y_i for every
/// subject; subjects without observations get a zero row.
Eigen::MatrixXd conditional_scores(const UnivariateModel& model, const UnivariateSample& centered);

ScoreMatrix conditional_scores(const UnivariateModel& model, const UnivariateSample& centered,
                               std::vector<std::string> subject_ids, std::string variable);

/// Score predictor for a single subject.
Eigen::VectorXd subject_scores(const UnivariateModel& model, const SubjectSeries& centered);

}  // namespace smfpca
