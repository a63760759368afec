#pragma once

#include "smfpca/grid_basis.hpp"

#include <Eigen/Dense>

#include <vector>

namespace smfpca {

/// Pivot norms below this after projection are treated as rank loss.
inline constexpr double kMgsPivotThreshold = 1e-10;

/// Grid values of orthonormal functions, optionally with their
/// coefficients in the orthonormalized continuous basis.
struct OrthonormalSet {
  Eigen::MatrixXd values;             ///< H x M, columns orthonormal under the grid weights
  Eigen::MatrixXd coeffs_orthobasis;  ///< U x M; empty until continuous_representation()

  Eigen::Index size() const noexcept { return values.cols(); }
};

/// Weighted QR produced by modified Gram-Schmidt: raw = q * r with
/// q^T W q = I and r upper triangular with positive diagonal.
struct MgsFactor {
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
};

/// Single-pass modified Gram-Schmidt under <f, g>_w = sum_j w_j f_j g_j.
/// No sign canonicalization. Throws RankDeficiency naming the column
/// whose post-projection norm falls below kMgsPivotThreshold.
MgsFactor weighted_mgs_factor(const Eigen::Ref<const Eigen::MatrixXd>& raw,
                              const Eigen::Ref<const Eigen::VectorXd>& weights);

/// Reverse-mode derivative of weighted_mgs_factor: given dL/dq, returns
/// dL/draw. r is treated as an intermediate with zero adjoint.
Eigen::MatrixXd weighted_mgs_backward(const MgsFactor& factor,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights,
                                      const Eigen::Ref<const Eigen::MatrixXd>& q_bar);

/// Flips each column so its first entry exceeding 1e-8 in magnitude is
/// positive. Returns the applied signs (+1 or -1).
Eigen::VectorXd canonicalize_signs(Eigen::Ref<Eigen::MatrixXd> columns);

/// Orthonormalizes `raw` (H x M grid values) and canonicalizes signs.
OrthonormalSet weighted_mgs(const Eigen::Ref<const Eigen::MatrixXd>& raw, const QuadratureGrid& grid);

/// Fills coeffs_orthobasis = Btilde^T W Phi for the orthonormalized basis
/// Btilde = G^{-1/2} B. The basis must live on the same grid as `set`.
OrthonormalSet continuous_representation(OrthonormalSet set, const BasisSystem& basis);

/// Coefficients of the continuous functions with respect to the raw basis,
/// i.e. G^{-1/2} coeffs_orthobasis (U x M).
Eigen::MatrixXd raw_basis_coefficients(const OrthonormalSet& set, const BasisSystem& basis);

/// Evaluates the continuous representation at arbitrary points: one row
/// per point, one column per function. Throws DomainError outside the
/// basis domain.
Eigen::MatrixXd evaluate_continuous(const OrthonormalSet& set, const BasisSystem& basis,
                                    const Eigen::Ref<const Eigen::VectorXd>& t);

}  // namespace smfpca
