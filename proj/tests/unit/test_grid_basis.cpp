#include "smfpca/errors.hpp"
#include "smfpca/grid_basis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace smfpca;

TEST(BuildGrid, ThreePointTrapezoid) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 3);
  EXPECT_EQ(g.points(), Eigen::Vector3d(0.0, 0.5, 1.0));
  EXPECT_EQ(g.weights(), Eigen::Vector3d(0.25, 0.5, 0.25));
}

TEST(BuildGrid, TwoPointGridIntegratesOne) {
  const QuadratureGrid g = QuadratureGrid::from_points(Eigen::Vector2d(0.0, 1.0));
  EXPECT_EQ(g.integrate(Eigen::Vector2d::Ones()), 1.0);
}

TEST(BuildGrid, IntegratesSquare) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 101);
  EXPECT_NEAR(g.integrate(g.points().array().square().matrix()), 1.0 / 3.0, 1e-4);
}

TEST(BuildGrid, RejectsBadInput) {
  EXPECT_THROW(build_grid({0.0, 1.0}, 2), InvalidArgument);
  EXPECT_THROW(build_grid({1.0, 1.0}, 5), InvalidArgument);
  EXPECT_THROW(build_grid({2.0, 1.0}, 5), InvalidArgument);
}

TEST(BuildGrid, WeightsSumToLength) {
  for (std::size_t h : {3u, 10u, 101u, 977u}) {
    const QuadratureGrid g = build_grid({-2.0, 5.5}, h);
    EXPECT_NEAR(g.weights().sum(), 7.5, 7.5 * 1e-12);
    EXPECT_EQ(g.points()[0], -2.0);
    EXPECT_EQ(g.points()[g.size() - 1], 5.5);
    EXPECT_GT(g.weights().minCoeff(), 0.0);
  }
}

TEST(BuildGrid, NonUniformWeights) {
  const QuadratureGrid g = QuadratureGrid::from_points(Eigen::Vector4d(0.0, 0.1, 0.5, 1.0));
  EXPECT_DOUBLE_EQ(g.weights()[0], 0.05);
  EXPECT_DOUBLE_EQ(g.weights()[1], 0.25);
  EXPECT_DOUBLE_EQ(g.weights()[2], 0.45);
  EXPECT_DOUBLE_EQ(g.weights()[3], 0.25);
}

TEST(BuildGrid, ErrorShrinksQuadratically) {
  auto err = [](std::size_t h) {
    const QuadratureGrid g = build_grid({0.0, 1.0}, h);
    const Eigen::VectorXd f = (g.points().array().exp() * g.points().array().cos()).matrix();
    const double exact = 0.5 * (std::exp(1.0) * (std::cos(1.0) + std::sin(1.0)) - 1.0);
    return std::abs(g.integrate(f) - exact);
  };
  EXPECT_GE(err(100) / err(200), 3.5);
}

TEST(EvalBasis, FourierConstant) {
  const BasisSystem b = eval_basis({BasisKind::Fourier, 1, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 11));
  EXPECT_TRUE(b.eval_matrix().isApprox(Eigen::MatrixXd::Ones(11, 1)));
}

TEST(EvalBasis, FourierOrdering) {
  const BasisSystem b = eval_basis({BasisKind::Fourier, 5, 4, {0.0, 2.0}}, build_grid({0.0, 2.0}, 41));
  const double t = 0.3;
  const Eigen::RowVectorXd row = b.evaluate(t);
  const double s = std::sqrt(2.0 / 2.0);
  const double w = 2 * std::numbers::pi / 2.0;
  EXPECT_NEAR(row[0], 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(row[1], s * std::sin(w * t), 1e-14);
  EXPECT_NEAR(row[2], s * std::cos(w * t), 1e-14);
  EXPECT_NEAR(row[3], s * std::sin(2 * w * t), 1e-14);
  EXPECT_NEAR(row[4], s * std::cos(2 * w * t), 1e-14);
}

TEST(EvalBasis, BSplinePartitionOfUnity) {
  const BasisSystem b = eval_basis({BasisKind::BSpline, 5, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 101));
  EXPECT_LT((b.eval_matrix().rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  const Eigen::VectorXd off = linspace({0.0, 1.0}, 333);
  EXPECT_LT((b.evaluate(off).rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(EvalBasis, GramMatchesFineQuadrature) {
  const BasisSystem b = eval_basis({BasisKind::BSpline, 6, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 200));
  const std::size_t h = 20000;
  const double step = 1.0 / static_cast<double>(h - 1);
  Eigen::MatrixXd fine = Eigen::MatrixXd::Zero(6, 6);
  for (std::size_t j = 0; j < h; ++j) {
    const double t = static_cast<double>(j) * step;
    const double w = (j == 0 || j + 1 == h) ? step / 2 : step;
    const Eigen::RowVectorXd r = b.evaluate(t);
    fine += w * r.transpose() * r;
  }
  EXPECT_LT((b.gram() - fine).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EvalBasis, GramInverseRoots) {
  const BasisSystem b = eval_basis({BasisKind::BSpline, 8, 4, {0.0, 3.0}}, build_grid({0.0, 3.0}, 101));
  const Eigen::MatrixXd i8 = Eigen::MatrixXd::Identity(8, 8);
  EXPECT_LT((b.gram_inv_sqrt() * b.gram() * b.gram_inv_sqrt() - i8).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((b.grid_gram_inv_sqrt() * b.grid_gram() * b.grid_gram_inv_sqrt() - i8).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EvalBasis, RejectsTooManyFunctions) {
  EXPECT_THROW(eval_basis({BasisKind::BSpline, 12, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 5)), Error);
  EXPECT_THROW(eval_basis({BasisKind::BSpline, 3, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 50)), InvalidArgument);
}

TEST(EvalBasis, OutsideDomainThrows) {
  const BasisSystem b = eval_basis({BasisKind::BSpline, 5, 4, {0.0, 1.0}}, build_grid({0.0, 1.0}, 21));
  EXPECT_THROW(b.evaluate(1.5), DomainError);
  EXPECT_THROW(b.evaluate(-0.01), DomainError);
}

TEST(GramInvSqrt, Identity) {
  EXPECT_TRUE(gram_inv_sqrt(Eigen::MatrixXd::Identity(4, 4)).isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-14));
}

TEST(GramInvSqrt, Diagonal) {
  const Eigen::MatrixXd r = gram_inv_sqrt(Eigen::Vector2d(4.0, 9.0).asDiagonal());
  EXPECT_NEAR(r(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-15);
}

TEST(GramInvSqrt, RandomSpd) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(5, 5);
  for (Eigen::Index i = 0; i < 25; ++i) x.data()[i] = n(rng);
  const Eigen::MatrixXd a = x * x.transpose() + 0.5 * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd r = gram_inv_sqrt(a);
  EXPECT_LT((r - r.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r * a * r - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((r * r * a - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GramInvSqrt, NearSingularNamesEigenvalue) {
  Eigen::Matrix2d a;
  a << 1.0, 1.0, 1.0, 1.0 + 1e-14;
  try {
    gram_inv_sqrt(a);
    FAIL() << "expected IllConditionedBasis";
  } catch (const IllConditionedBasis& e) {
    EXPECT_LT(e.smallest_eigenvalue(), 1e-12);
  }
}
