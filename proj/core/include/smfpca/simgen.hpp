#pragma once

#include "smfpca/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace smfpca {

/// Settings for one synthetic trivariate dataset on [0, 1].
struct ScenarioConfig {
  std::size_t n = 100;
  double sigma2 = 0.25;
  double rho = 0.5;
  int m_min = 3;  ///< per-subject, per-variable observation counts are uniform on [m_min, m_max]
  int m_max = 7;
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;

  void validate() const;
};

/// The six preset scenarios, numbered 1..6.
ScenarioConfig scenario(int index);

inline constexpr int kSimVariables = 3;
inline constexpr int kSimComponents = 9;

/// Marginal basis triple of variable k (0-based) at t: one row per point.
Eigen::MatrixXd sim_basis(int k, const Eigen::Ref<const Eigen::VectorXd>& t);
/// Diagonal of the marginal eigenvalue matrix of variable k.
Eigen::Vector3d sim_lambda(int k);
double sim_mean(int k, double t);

/// C_{kk'}(s, t) of the generating process (0-based variables).
double true_covariance(int k, int k2, double s, double t, double rho);

/// Multivariate eigenpairs of the generating covariance, obtained by a
/// quadrature eigen-solve on `grid_size` points per variable.
struct TrueEigen {
  Eigen::VectorXd values;              ///< 9 eigenvalues, descending
  Eigen::MatrixXd grid_values;         ///< 3H x 9 eigenfunctions on the stacked grid
  Eigen::VectorXd grid;                ///< the per-variable grid
  /// Each eigenfunction restricted to variable k is sim_basis(k, t) * coeffs[k].
  std::vector<Eigen::MatrixXd> coeffs; ///< 3 matrices of size 3 x 9
  Eigen::VectorXd trailing;            ///< eigenvalues 10.. of the discretized operator
};

TrueEigen true_mv_eigen(double rho, std::size_t grid_size = 401);

/// Everything needed to score an estimate against the generating process.
struct TruthBundle {
  ScenarioConfig config;
  Eigen::VectorXd eigenvalues;          ///< d_l, descending
  std::vector<Eigen::MatrixXd> coeffs;  ///< per variable, 3 x 9
  Eigen::MatrixXd scores;               ///< n x 9 simulated multivariate scores
  std::vector<std::string> subject_ids;

  double mean(int k, double t) const { return sim_mean(k, t); }
  Eigen::VectorXd mean(int k, const Eigen::Ref<const Eigen::VectorXd>& t) const;
  /// |t| x 9 values of psi_l restricted to variable k.
  Eigen::MatrixXd eigenfunctions(int k, const Eigen::Ref<const Eigen::VectorXd>& t) const;
  Eigen::MatrixXd covariance(int k, int k2, const Eigen::Ref<const Eigen::VectorXd>& s,
                             const Eigen::Ref<const Eigen::VectorXd>& t) const;
  /// n x |t| centered curves sum_l scores_il psi_l^(k)(t).
  Eigen::MatrixXd centered_curves(int k, const Eigen::Ref<const Eigen::VectorXd>& t) const;
};

struct SimulatedData {
  SparseDataset data;
  TruthBundle truth;
};

/// Draws one dataset. Random streams are keyed by the seed and addressed
/// by (replicate, subject, channel), so output is independent of call
/// order and threading.
SimulatedData generate(const ScenarioConfig& config);

/// Variable names used in generated datasets.
std::vector<std::string> sim_variable_names();

}  // namespace smfpca
