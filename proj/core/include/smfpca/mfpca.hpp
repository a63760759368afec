#pragma once

#include "smfpca/scoring.hpp"
#include "smfpca/ufpca.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace smfpca {

/// Multivariate principal components assembled from univariate fits.
///
/// The full eigendecomposition of the stacked-score covariance is kept so
/// components beyond the truncation can still be inspected; accessors
/// without a count argument use the first `truncation` components.
struct MultivariateModel {
  std::vector<std::string> variable_names;
  std::vector<UnivariateModel> univariate;
  std::vector<ScoreMatrix> univariate_scores;
  std::vector<std::string> subject_ids;
  Eigen::VectorXd weights;            ///< per-variable inner-product weights
  Eigen::MatrixXd z;                  ///< M+ x M+ stacked-score covariance
  Eigen::VectorXd spectrum;           ///< all eigenvalues of z, descending, clipped at 0
  Eigen::MatrixXd eigenvectors_full;  ///< M+ x M+, columns match spectrum
  int truncation = 0;                 ///< number of retained components M
  Eigen::MatrixXd scores;             ///< n x M multivariate scores
  std::vector<std::string> warnings;

  std::size_t num_variables() const noexcept { return univariate.size(); }
  int total_rank() const noexcept { return static_cast<int>(z.rows()); }
  /// Row offset of variable k's block inside the stacked score vector.
  int block_offset(std::size_t k) const;
  Eigen::VectorXd eigenvalues() const { return spectrum.head(truncation); }
  Eigen::MatrixXd eigenvectors() const { return eigenvectors_full.leftCols(truncation); }
};

/// Covariance (divisor n - 1, scores demeaned) of the column-stacked score
/// blocks, block k scaled by sqrt(weights[k]). Throws AlignmentError when
/// subject orderings differ.
Eigen::MatrixXd build_z(const std::vector<ScoreMatrix>& scores, const Eigen::VectorXd& weights);

struct SymmetricEigen {
  Eigen::VectorXd values;   ///< descending
  Eigen::MatrixXd vectors;  ///< orthonormal columns, largest-magnitude entry positive
  bool clipped = false;     ///< an eigenvalue below -1e-8 was clipped to zero
};

SymmetricEigen eigen_z(const Eigen::MatrixXd& z);

/// Truncation by maximum distance from the chord joining the first and
/// last eigenvalues. When the spectrum is nearly linear (relative
/// residual of the least-squares line below 0.1) or the chord distance is
/// negligible, falls back to the smallest count reaching 90% of the total.
int elbow_select(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues);

/// Smallest count whose cumulative share of the total reaches `fraction`.
int cumulative_variance_select(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, double fraction);

/// Builds z, decomposes it, picks the truncation (elbow rule unless given)
/// and computes the multivariate scores.
MultivariateModel combine(std::vector<std::string> variable_names, std::vector<UnivariateModel> univariate,
                          std::vector<ScoreMatrix> scores, Eigen::VectorXd weights,
                          std::optional<int> truncation = std::nullopt);

/// psi_l^(k)(t) for l < count (default: truncation), one matrix per variable
/// with rows per point.
std::vector<Eigen::MatrixXd> mv_eigenfunctions(const MultivariateModel& model,
                                               const std::vector<Eigen::VectorXd>& points,
                                               std::optional<int> count = std::nullopt);

/// rho_{i,l} = sum_k sum_j [c_l]_j^(k) sqrt(w_k) xi_{i,j}^(k).
Eigen::MatrixXd mv_scores(const MultivariateModel& model, const std::vector<ScoreMatrix>& scores,
                          std::optional<int> count = std::nullopt);

/// Gram matrix of the multivariate eigenfunctions under the weighted
/// product of per-variable quadrature inner products.
Eigen::MatrixXd mv_gram(const MultivariateModel& model, std::optional<int> count = std::nullopt);

/// C_{kk'}(s, t) = sum_l eta_l psi_l^(k)(s) psi_l^(k')(t).
Eigen::MatrixXd reconstruct_covariance(const MultivariateModel& model, std::size_t k,
                                       const Eigen::Ref<const Eigen::VectorXd>& s, std::size_t k2,
                                       const Eigen::Ref<const Eigen::VectorXd>& t,
                                       std::optional<int> count = std::nullopt);

/// Fitted curves mean + sum_l rho_l psi_l per variable (n x |points[k]|).
std::vector<Eigen::MatrixXd> reconstruct_curves(const MultivariateModel& model,
                                                const std::vector<Eigen::VectorXd>& points);

/// Same without the mean term.
std::vector<Eigen::MatrixXd> reconstruct_centered_curves(const MultivariateModel& model,
                                                         const std::vector<Eigen::VectorXd>& points);

}  // namespace smfpca
