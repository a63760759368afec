#include "smfpca/errors.hpp"
#include "smfpca/orthonorm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace smfpca;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double gram_error(const Eigen::MatrixXd& phi, const QuadratureGrid& g) {
  const Eigen::MatrixXd gram = phi.transpose() * g.weights().asDiagonal() * phi;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(WeightedMgs, OrthonormalInputIsFixedPoint) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 51);
  const OrthonormalSet first = weighted_mgs(random_matrix(51, 3, 1), g);
  const OrthonormalSet again = weighted_mgs(first.values, g);
  EXPECT_LT((again.values - first.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedMgs, ConstantColumnNormalizesToOne) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 21);
  const OrthonormalSet s = weighted_mgs(Eigen::MatrixXd::Constant(21, 1, 3.0), g);
  EXPECT_LT((s.values.array() - 1.0).abs().maxCoeff(), 1e-14);
}

TEST(WeightedMgs, TwoColumnHandCase) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 3);
  Eigen::MatrixXd raw(3, 2);
  raw << 1, 0, 1, 0.5, 1, 1;
  const double norm = std::sqrt(0.125);
  const Eigen::Vector3d want(-0.5 / norm, 0.0, 0.5 / norm);
  EXPECT_LT((weighted_mgs_factor(raw, g.weights()).q.col(1) - want).cwiseAbs().maxCoeff(), 1e-14);
  // The canonical form makes the leading entry positive.
  EXPECT_LT((weighted_mgs(raw, g).values.col(1) + want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(WeightedMgs, SignConvention) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 31);
  const OrthonormalSet s = weighted_mgs(random_matrix(31, 4, 2), g);
  for (Eigen::Index q = 0; q < s.values.cols(); ++q) {
    Eigen::Index j = 0;
    while (std::abs(s.values(j, q)) <= 1e-8) ++j;
    EXPECT_GT(s.values(j, q), 0.0);
  }
}

TEST(WeightedMgs, RankDeficiencyNamesColumn) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 11);
  Eigen::MatrixXd raw = random_matrix(11, 3, 4);
  raw.col(2) = 2.0 * raw.col(0) - raw.col(1);
  try {
    weighted_mgs(raw, g);
    FAIL() << "expected RankDeficiency";
  } catch (const RankDeficiency& e) {
    EXPECT_EQ(e.column(), 2u);
  }
}

TEST(WeightedMgs, OrthonormalIdempotentDeterministic) {
  const QuadratureGrid g = build_grid({0.0, 2.0}, 101);
  const Eigen::MatrixXd raw = random_matrix(101, 4, 5);
  const OrthonormalSet a = weighted_mgs(raw, g);
  const OrthonormalSet b = weighted_mgs(raw, g);
  EXPECT_LT(gram_error(a.values, g), 1e-12);
  EXPECT_TRUE(a.values == b.values);
  EXPECT_LT((weighted_mgs(a.values, g).values - a.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedMgs, SpanPreserved) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 61);
  const Eigen::MatrixXd raw = random_matrix(61, 3, 6);
  const OrthonormalSet s = weighted_mgs(raw, g);
  const Eigen::MatrixXd coef = s.values.transpose() * g.weights().asDiagonal() * raw;
  EXPECT_LT((s.values * coef - raw).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(WeightedMgs, BackwardMatchesFiniteDifferences) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 25);
  const Eigen::MatrixXd raw = random_matrix(25, 3, 7);
  const Eigen::MatrixXd c = random_matrix(25, 3, 8);
  const MgsFactor f = weighted_mgs_factor(raw, g.weights());
  const Eigen::MatrixXd grad = weighted_mgs_backward(f, g.weights(), c);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < raw.size(); i += 7) {
    Eigen::MatrixXd p = raw, m = raw;
    p.data()[i] += h;
    m.data()[i] -= h;
    const double fd = ((weighted_mgs_factor(p, g.weights()).q.cwiseProduct(c)).sum() -
                       (weighted_mgs_factor(m, g.weights()).q.cwiseProduct(c)).sum()) /
                      (2 * h);
    EXPECT_NEAR(grad.data()[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(ContinuousRepresentation, ReproducesGridValues) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 101);
  const BasisSystem b = eval_basis({BasisKind::BSpline, 8, 4, {0.0, 1.0}}, g);
  const OrthonormalSet s =
      continuous_representation(weighted_mgs(b.eval_matrix() * random_matrix(8, 3, 9), g), b);
  EXPECT_LT((evaluate_continuous(s, b, g.points()) - s.values).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ContinuousRepresentation, FourierSelfRepresentation) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 64);
  const BasisSystem b = eval_basis({BasisKind::Fourier, 5, 4, {0.0, 1.0}}, g);
  const OrthonormalSet s = continuous_representation(weighted_mgs(b.eval_matrix(), g), b);
  EXPECT_LT((s.coeffs_orthobasis.cwiseAbs() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ContinuousRepresentation, AgreesWithDenseGrid) {
  const Eigen::MatrixXd beta = random_matrix(7, 2, 10);
  auto run = [&](std::size_t h, const Eigen::VectorXd& t) {
    const QuadratureGrid g = build_grid({0.0, 1.0}, h);
    const BasisSystem b = eval_basis({BasisKind::BSpline, 7, 4, {0.0, 1.0}}, g);
    return evaluate_continuous(continuous_representation(weighted_mgs(b.eval_matrix() * beta, g), b), b, t);
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd t(1000);
  for (auto& x : t) x = u(rng);
  EXPECT_LT((run(101, t) - run(10001, t)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(ContinuousRepresentation, SecondOrderInGridSpacing) {
  const Eigen::MatrixXd beta = random_matrix(7, 2, 10);
  const Eigen::VectorXd t = linspace({0.0, 1.0}, 997);
  auto run = [&](std::size_t h) {
    const QuadratureGrid g = build_grid({0.0, 1.0}, h);
    const BasisSystem b = eval_basis({BasisKind::BSpline, 7, 4, {0.0, 1.0}}, g);
    return evaluate_continuous(continuous_representation(weighted_mgs(b.eval_matrix() * beta, g), b), b, t);
  };
  const Eigen::MatrixXd ref = run(10001);
  const double e1 = (run(101) - ref).cwiseAbs().maxCoeff(), e2 = (run(201) - ref).cwiseAbs().maxCoeff();
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(ContinuousRepresentation, OutsideDomainThrows) {
  const QuadratureGrid g = build_grid({0.0, 1.0}, 41);
  const BasisSystem b = eval_basis({BasisKind::BSpline, 6, 4, {0.0, 1.0}}, g);
  const OrthonormalSet s = continuous_representation(weighted_mgs(b.eval_matrix().leftCols(2), g), b);
  EXPECT_THROW(evaluate_continuous(s, b, Eigen::Vector2d(0.5, 1.2)), DomainError);
}
