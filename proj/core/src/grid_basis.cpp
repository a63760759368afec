#include "smfpca/grid_basis.hpp"

#include "smfpca/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace smfpca {

namespace {

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& x) {
  const Eigen::Index h = x.size();
  Eigen::VectorXd w(h);
  w[0] = 0.5 * (x[1] - x[0]);
  w[h - 1] = 0.5 * (x[h - 1] - x[h - 2]);
  for (Eigen::Index j = 1; j + 1 < h; ++j) w[j] = 0.5 * (x[j + 1] - x[j - 1]);
  return w;
}

// Points within this distance of the domain are clamped onto it.
double domain_slack(Interval d) { return 1e-12 * std::max(1.0, std::abs(d.hi) + std::abs(d.lo)); }

}  // namespace

QuadratureGrid QuadratureGrid::from_points(Eigen::VectorXd points) {
  if (points.size() < 2) throw InvalidArgument("quadrature grid needs at least two points");
  for (Eigen::Index j = 0; j < points.size(); ++j) {
    if (!std::isfinite(points[j])) throw InvalidArgument("quadrature grid point is not finite");
    if (j > 0 && !(points[j] > points[j - 1]))
      throw InvalidArgument("quadrature grid points must be strictly increasing");
  }
  QuadratureGrid g;
  g.weights_ = trapezoid_weights(points);
  g.domain_ = {points[0], points[points.size() - 1]};
  g.points_ = std::move(points);
  return g;
}

double QuadratureGrid::integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const {
  if (values.size() != points_.size()) throw InvalidArgument("integrand length does not match grid");
  return weights_.dot(values);
}

double QuadratureGrid::inner(const Eigen::Ref<const Eigen::VectorXd>& f,
                             const Eigen::Ref<const Eigen::VectorXd>& g) const {
  if (f.size() != points_.size() || g.size() != points_.size())
    throw InvalidArgument("inner product operands do not match grid");
  return (weights_.array() * f.array() * g.array()).sum();
}

Eigen::VectorXd linspace(Interval domain, std::size_t count) {
  if (count < 2) throw InvalidArgument("linspace needs at least two points");
  Eigen::VectorXd x(static_cast<Eigen::Index>(count));
  const double step = domain.length() / static_cast<double>(count - 1);
  for (std::size_t j = 0; j < count; ++j) x[static_cast<Eigen::Index>(j)] = domain.lo + step * static_cast<double>(j);
  x[x.size() - 1] = domain.hi;
  return x;
}

QuadratureGrid build_grid(Interval domain, std::size_t count) {
  if (count < 3) throw InvalidArgument("grid size must be at least 3, got " + std::to_string(count));
  if (!(domain.lo < domain.hi) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi))
    throw InvalidArgument("grid domain must be a nondegenerate finite interval");
  return QuadratureGrid::from_points(linspace(domain, count));
}

std::string to_string(BasisKind kind) {
  return kind == BasisKind::BSpline ? "bspline" : "fourier";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "bspline" || name == "b-spline") return BasisKind::BSpline;
  if (name == "fourier") return BasisKind::Fourier;
  throw InvalidArgument("unknown basis kind '" + name + "'");
}

Eigen::MatrixXd gram_inv_sqrt(const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) throw InvalidArgument("Gram matrix must be square and nonempty");
  const double asym = (gram - gram.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, gram.cwiseAbs().maxCoeff()))
    throw InvalidArgument("Gram matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gram + gram.transpose()));
  const Eigen::VectorXd& d = es.eigenvalues();
  const double largest = d.maxCoeff();
  const double smallest = d.minCoeff();
  if (!(largest > 0.0) || !(smallest > 1e-12 * largest)) {
    std::ostringstream os;
    os << "Gram matrix is ill-conditioned: smallest eigenvalue " << smallest << " vs largest " << largest;
    throw IllConditionedBasis(os.str(), smallest);
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  Eigen::MatrixXd r = v * d.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return 0.5 * (r + r.transpose());
}

void BasisSystem::evaluate_row(double t, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
  const Interval d = spec_.domain;
  const double slack = domain_slack(d);
  if (!(t >= d.lo - slack && t <= d.hi + slack)) {
    std::ostringstream os;
    os << "point " << t << " lies outside the basis domain [" << d.lo << ", " << d.hi << "]";
    throw DomainError(os.str());
  }
  t = std::clamp(t, d.lo, d.hi);
  row.setZero();

  if (spec_.kind == BasisKind::Fourier) {
    const double len = d.length();
    const double x = (t - d.lo) / len;
    row[0] = 1.0 / std::sqrt(len);
    const double amp = std::sqrt(2.0 / len);
    for (int u = 1; u < spec_.count; ++u) {
      const int k = (u + 1) / 2;
      const double arg = 2.0 * std::numbers::pi * k * x;
      row[u] = amp * ((u % 2 == 1) ? std::sin(arg) : std::cos(arg));
    }
    return;
  }

  // Cox-de Boor via the triangular scheme on the active knot span.
  const int p = spec_.order - 1;
  const int n = spec_.count;
  int span = n - 1;
  if (t < d.hi) {
    span = p;
    while (span < n - 1 && knots_[static_cast<std::size_t>(span + 1)] <= t) ++span;
  }
  std::vector<double> basis(static_cast<std::size_t>(p + 1), 0.0);
  std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
  basis[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots_[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = basis[r] / (right[r + 1] + left[j - r]);
      basis[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    basis[j] = saved;
  }
  for (int j = 0; j <= p; ++j) row[span - p + j] = basis[j];
}

Eigen::RowVectorXd BasisSystem::evaluate(double t) const {
  Eigen::RowVectorXd row(spec_.count);
  evaluate_row(t, row);
  return row;
}

Eigen::MatrixXd BasisSystem::evaluate(const Eigen::Ref<const Eigen::VectorXd>& t) const {
  Eigen::MatrixXd out(t.size(), spec_.count);
  for (Eigen::Index i = 0; i < t.size(); ++i) evaluate_row(t[i], out.row(i));
  return out;
}

BasisSystem eval_basis(const BasisSpec& spec, const QuadratureGrid& grid) {
  if (grid.size() < 2) throw InvalidArgument("basis grid is empty");
  if (!(spec.domain == grid.domain())) throw InvalidArgument("basis domain differs from the grid's domain");
  if (spec.count < 1) throw InvalidArgument("basis needs at least one function");
  if (spec.kind == BasisKind::BSpline) {
    if (spec.order < 2) throw InvalidArgument("B-spline order must be at least 2");
    if (spec.count < spec.order)
      throw InvalidArgument("B-spline basis count " + std::to_string(spec.count) + " is below the order " +
                            std::to_string(spec.order));
  }
  if (spec.count > grid.size()) {
    throw IllConditionedBasis("basis count " + std::to_string(spec.count) + " exceeds grid size " +
                                  std::to_string(grid.size()),
                              0.0);
  }

  BasisSystem b;
  b.spec_ = spec;
  b.grid_ = grid;
  if (spec.kind == BasisKind::BSpline) {
    const int interior = spec.count - spec.order;
    const Interval d = spec.domain;
    b.knots_.assign(static_cast<std::size_t>(spec.order), d.lo);
    for (int j = 1; j <= interior; ++j)
      b.knots_.push_back(d.lo + d.length() * static_cast<double>(j) / static_cast<double>(interior + 1));
    b.knots_.insert(b.knots_.end(), static_cast<std::size_t>(spec.order), d.hi);
  }

  b.eval_ = b.evaluate(grid.points());
  b.grid_gram_ = b.eval_.transpose() * grid.weights().asDiagonal() * b.eval_;
  b.grid_gram_ = 0.5 * (b.grid_gram_ + b.grid_gram_.transpose());

  const auto fine_count = static_cast<std::size_t>(10 * (grid.size() - 1) + 1);
  const QuadratureGrid fine = build_grid(spec.domain, fine_count);
  const Eigen::MatrixXd fine_eval = b.evaluate(fine.points());
  b.gram_ = fine_eval.transpose() * fine.weights().asDiagonal() * fine_eval;
  b.gram_ = 0.5 * (b.gram_ + b.gram_.transpose());

  b.grid_gram_inv_sqrt_ = gram_inv_sqrt(b.grid_gram_);
  b.gram_inv_sqrt_ = gram_inv_sqrt(b.gram_);
  return b;
}

}  // namespace smfpca
