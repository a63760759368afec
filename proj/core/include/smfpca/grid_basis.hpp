#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace smfpca {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const noexcept { return hi - lo; }
  bool contains(double t) const noexcept { return t >= lo && t <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Quadrature abscissae with trapezoid weights over a closed interval.
class QuadratureGrid {
 public:
  QuadratureGrid() = default;

  /// Arbitrary strictly increasing abscissae (at least two); the domain is
  /// [points.front(), points.back()].
  static QuadratureGrid from_points(Eigen::VectorXd points);

  const Eigen::VectorXd& points() const noexcept { return points_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  Interval domain() const noexcept { return domain_; }
  Eigen::Index size() const noexcept { return points_.size(); }

  double integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const;
  double inner(const Eigen::Ref<const Eigen::VectorXd>& f,
               const Eigen::Ref<const Eigen::VectorXd>& g) const;

 private:
  Eigen::VectorXd points_;
  Eigen::VectorXd weights_;
  Interval domain_;
};

/// Equally spaced grid of `count` points on `domain` (count >= 3).
QuadratureGrid build_grid(Interval domain, std::size_t count);

/// `count` equally spaced points covering `domain`, endpoints included.
Eigen::VectorXd linspace(Interval domain, std::size_t count);

enum class BasisKind { BSpline, Fourier };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

struct BasisSpec {
  BasisKind kind = BasisKind::BSpline;
  int count = 5;
  int order = 4;  ///< B-spline order (degree + 1); ignored for Fourier.
  Interval domain;
};

/// A basis family evaluated on a quadrature grid, with its Gram matrices.
///
/// Two Gram matrices are kept. `gram()` approximates the L2 Gram
/// integral on a uniform grid refined tenfold; `grid_gram()` is B^T W B
/// under the analysis grid's own trapezoid rule. Continuous
/// representations of grid-valued functions use the latter, which makes
/// them exact projections under the discrete inner product.
class BasisSystem {
 public:
  BasisSystem() = default;

  const BasisSpec& spec() const noexcept { return spec_; }
  BasisKind kind() const noexcept { return spec_.kind; }
  int count() const noexcept { return spec_.count; }
  Interval domain() const noexcept { return spec_.domain; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const QuadratureGrid& grid() const noexcept { return grid_; }

  /// H x U basis values on the grid.
  const Eigen::MatrixXd& eval_matrix() const noexcept { return eval_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::MatrixXd& gram_inv_sqrt() const noexcept { return gram_inv_sqrt_; }
  const Eigen::MatrixXd& grid_gram() const noexcept { return grid_gram_; }
  const Eigen::MatrixXd& grid_gram_inv_sqrt() const noexcept { return grid_gram_inv_sqrt_; }

  /// Basis values at arbitrary points, one row per point. Throws
  /// DomainError for points outside the domain.
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& t) const;
  Eigen::RowVectorXd evaluate(double t) const;

  friend BasisSystem eval_basis(const BasisSpec& spec, const QuadratureGrid& grid);

 private:
  void evaluate_row(double t, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;

  BasisSpec spec_;
  std::vector<double> knots_;
  QuadratureGrid grid_;
  Eigen::MatrixXd eval_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd gram_inv_sqrt_;
  Eigen::MatrixXd grid_gram_;
  Eigen::MatrixXd grid_gram_inv_sqrt_;
};

/// Evaluates the basis on `grid` and computes both Gram matrices.
/// The basis domain must equal the grid's domain.
BasisSystem eval_basis(const BasisSpec& spec, const QuadratureGrid& grid);

/// Symmetric inverse square root of an SPD matrix. Throws
/// IllConditionedBasis when the smallest eigenvalue is below
/// 1e-12 times the largest.
Eigen::MatrixXd gram_inv_sqrt(const Eigen::MatrixXd& gram);

}  // namespace smfpca
