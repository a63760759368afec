#pragma once

#include "smfpca/bfgs.hpp"
#include "smfpca/dataset.hpp"
#include "smfpca/errors.hpp"
#include "smfpca/grid_basis.hpp"
#include "smfpca/mean_smooth.hpp"
#include "smfpca/orthonorm.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smfpca {

/// Unconstrained parameters of the reduced-rank model: eigenfunction basis
/// coefficients, log-eigenvalues, and log noise variance.
struct UnivariateParams {
  Eigen::MatrixXd beta;  ///< U x M
  Eigen::VectorXd eta;   ///< log lambda_q
  double gamma = 0.0;    ///< log sigma^2

  int basis_count() const noexcept { return static_cast<int>(beta.rows()); }
  int rank() const noexcept { return static_cast<int>(beta.cols()); }
  Eigen::Index size() const noexcept { return beta.size() + eta.size() + 1; }

  /// Flattens to [vec(beta) column-major, eta, gamma].
  Eigen::VectorXd pack() const;
  static UnivariateParams unpack(const Eigen::Ref<const Eigen::VectorXd>& x, int basis_count, int rank);
};

/// Fitted univariate reduced-rank FPCA model for one variable.
struct UnivariateModel {
  UnivariateParams params;         ///< optimizer coordinates, column order as optimized
  OrthonormalSet eigenfunctions;   ///< columns ordered by descending eigenvalue, continuous coeffs filled
  Eigen::VectorXd eigenvalues;     ///< descending
  double noise_variance = 0.0;
  MeanModel mean;
  BasisSystem basis;
  double nll = 0.0;
  std::size_t subject_count = 0;   ///< subjects contributing to the likelihood
  BfgsStatus status = BfgsStatus::MaxIterations;
  int iterations = 0;

  int basis_count() const noexcept { return basis.count(); }
  int rank() const noexcept { return static_cast<int>(eigenvalues.size()); }
  const QuadratureGrid& grid() const noexcept { return basis.grid(); }

  /// Eigenfunctions at arbitrary points (one row per point).
  Eigen::MatrixXd eigenfunctions_at(const Eigen::Ref<const Eigen::VectorXd>& t) const;
};

/// Raised when every optimization attempt ends in a failed line search.
/// Carries the attempt with the lowest objective.
class OptimizerStalled : public Error {
 public:
  OptimizerStalled(const std::string& what, UnivariateModel best)
      : Error(what), best_(std::move(best)) {}
  const char* kind() const noexcept override { return "optimizer-stalled"; }
  const UnivariateModel& best() const noexcept { return best_; }

 private:
  UnivariateModel best_;
};

/// Phi diag(lambda) Phi^T + sigma^2 I for eigenfunction values `phi` (m x M).
Eigen::MatrixXd reduced_rank_cov(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                 const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, double noise_variance);

/// Average Gaussian negative log-likelihood of centered sparse data under
/// the reduced-rank covariance, with its analytic gradient.
///
/// Eigenfunctions are the weighted modified Gram-Schmidt orthonormalization
/// of B beta on the basis grid, carried to observation times through the
/// continuous representation. The gradient runs the chain rule back
/// through both steps.
class NllObjective {
 public:
  /// Every series must be nonempty and inside the basis domain.
  NllObjective(const UnivariateSample& centered, const BasisSystem& basis);

  double value(const UnivariateParams& params) const;
  double value_and_gradient(const UnivariateParams& params, UnivariateParams& grad) const;

  /// Packed-vector form used by the optimizer.
  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad, int rank) const;

  std::size_t subject_count() const noexcept { return subjects_.size(); }
  const BasisSystem& basis() const noexcept { return *basis_; }

 private:
  struct Subject {
    Eigen::MatrixXd design;  // m_i x U basis values at observation times
    Eigen::VectorXd y;
  };

  double evaluate(const UnivariateParams& params, UnivariateParams* grad) const;

  const BasisSystem* basis_;
  Eigen::MatrixXd projector_;  // U x H map from grid values to raw-basis coefficients
  std::vector<Subject> subjects_;
};

double nll(const UnivariateParams& params, const UnivariateSample& centered, const BasisSystem& basis);
UnivariateParams nll_gradient(const UnivariateParams& params, const UnivariateSample& centered,
                              const BasisSystem& basis);

struct FitOptions {
  BfgsOptions bfgs;
  int restarts = 3;          ///< seeded restarts after a stalled first attempt
  std::uint64_t seed = 0;
};

/// Starting point: spectral decomposition of a tensor-product basis
/// smoother of within-subject raw covariances, falling back to seeded
/// N(0, 0.1^2) coefficients when the smoother is unusable.
UnivariateParams initial_params(const UnivariateSample& centered, const BasisSystem& basis, int rank,
                                std::uint64_t seed);

/// Seeded random start (used for restarts).
UnivariateParams random_params(const UnivariateSample& centered, int basis_count, int rank, std::uint64_t seed);

/// Minimizes the NLL over (beta, eta, gamma) by BFGS. Empty series are
/// ignored. Throws OptimizerStalled, DivergedError, RankDeficiency.
UnivariateModel fit(const UnivariateSample& centered, const BasisSystem& basis, int rank,
                    const FitOptions& options = {}, std::optional<UnivariateParams> init = std::nullopt);

/// n * nll + U * M^2 + M + 1.
double aic(double nll_value, std::size_t n, int basis_count, int rank);
double aic(const UnivariateModel& model);

struct SelectionOptions {
  BasisKind kind = BasisKind::BSpline;
  int order = 4;
  std::vector<int> basis_counts{5, 6, 7, 8, 9, 10};
  std::vector<int> ranks{2, 3, 4};
  FitOptions fit;
};

struct CandidateSummary {
  int basis_count = 0;
  int rank = 0;
  bool ok = false;
  double nll = 0.0;
  double aic = 0.0;
  std::string error;
};

struct SelectionResult {
  UnivariateModel model;
  std::vector<CandidateSummary> candidates;
};

/// Fits every (U, M) pair and keeps the AIC minimizer; ties go to the
/// smaller M, then the smaller U. Throws SelectionFailed if nothing fits.
SelectionResult select_model(const UnivariateSample& centered, const QuadratureGrid& grid,
                             const SelectionOptions& options = {});

}  // namespace smfpca
