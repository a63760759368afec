#include "smfpca/orthonorm.hpp"

#include "smfpca/errors.hpp"

#include <cmath>
#include <sstream>

namespace smfpca {

MgsFactor weighted_mgs_factor(const Eigen::Ref<const Eigen::MatrixXd>& raw,
                              const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if (raw.rows() != weights.size()) throw InvalidArgument("raw columns do not match the grid size");
  const Eigen::Index m = raw.cols();
  MgsFactor f{raw, Eigen::MatrixXd::Zero(m, m)};
  for (Eigen::Index q = 0; q < m; ++q) {
    auto v = f.q.col(q);
    for (Eigen::Index k = 0; k < q; ++k) {
      const double proj = (weights.array() * v.array() * f.q.col(k).array()).sum();
      f.r(k, q) = proj;
      v -= proj * f.q.col(k);
    }
    const double norm = std::sqrt((weights.array() * v.array().square()).sum());
    if (!(norm > kMgsPivotThreshold)) {
      std::ostringstream os;
      os << "column " << q << " is linearly dependent on earlier columns (pivot norm " << norm << ")";
      throw RankDeficiency(os.str(), static_cast<std::size_t>(q));
    }
    f.r(q, q) = norm;
    v /= norm;
  }
  return f;
}

Eigen::MatrixXd weighted_mgs_backward(const MgsFactor& factor,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights,
                                      const Eigen::Ref<const Eigen::MatrixXd>& q_bar) {
  // Thin-QR adjoint in the W^{1/2}-scaled coordinates, mapped back:
  //   raw_bar = (q_bar + W q copyltu(-q_bar^T q)) r^{-T}
  const Eigen::MatrixXd& q = factor.q;
  Eigen::MatrixXd m = -(q_bar.transpose() * q);
  Eigen::MatrixXd sym = m.triangularView<Eigen::Lower>();
  sym += m.triangularView<Eigen::StrictlyLower>().transpose();
  Eigen::MatrixXd lhs = q_bar + weights.asDiagonal() * (q * sym);
  // lhs * r^{-T}: solve r x^T = lhs^T.
  Eigen::MatrixXd xt = factor.r.triangularView<Eigen::Upper>().solve(lhs.transpose());
  return xt.transpose();
}

Eigen::VectorXd canonicalize_signs(Eigen::Ref<Eigen::MatrixXd> columns) {
  Eigen::VectorXd signs = Eigen::VectorXd::Ones(columns.cols());
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    for (Eigen::Index r = 0; r < columns.rows(); ++r) {
      const double v = columns(r, c);
      if (std::abs(v) > 1e-8) {
        if (v < 0.0) {
          signs[c] = -1.0;
          columns.col(c) *= -1.0;
        }
        break;
      }
    }
  }
  return signs;
}

OrthonormalSet weighted_mgs(const Eigen::Ref<const Eigen::MatrixXd>& raw, const QuadratureGrid& grid) {
  MgsFactor f = weighted_mgs_factor(raw, grid.weights());
  canonicalize_signs(f.q);
  return OrthonormalSet{std::move(f.q), {}};
}

OrthonormalSet continuous_representation(OrthonormalSet set, const BasisSystem& basis) {
  if (set.values.rows() != basis.eval_matrix().rows())
    throw InvalidArgument("orthonormal set and basis live on different grids");
  const Eigen::MatrixXd projected =
      basis.eval_matrix().transpose() * (basis.grid().weights().asDiagonal() * set.values);
  set.coeffs_orthobasis = basis.grid_gram_inv_sqrt() * projected;
  return set;
}

Eigen::MatrixXd raw_basis_coefficients(const OrthonormalSet& set, const BasisSystem& basis) {
  if (set.coeffs_orthobasis.rows() != basis.count())
    throw InvalidArgument("continuous representation has not been computed for this basis");
  return basis.grid_gram_inv_sqrt() * set.coeffs_orthobasis;
}

Eigen::MatrixXd evaluate_continuous(const OrthonormalSet& set, const BasisSystem& basis,
                                    const Eigen::Ref<const Eigen::VectorXd>& t) {
  return basis.evaluate(t) * raw_basis_coefficients(set, basis);
}

}  // namespace smfpca
