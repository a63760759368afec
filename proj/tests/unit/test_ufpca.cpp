#include "smfpca/errors.hpp"
#include "smfpca/simgen.hpp"
#include "smfpca/ufpca.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace smfpca;

namespace {

const Interval kUnit{0.0, 1.0};

BasisSystem fourier(int u, std::size_t h = 101) { return eval_basis({BasisKind::Fourier, u, 4, kUnit}, build_grid(kUnit, h)); }

// Subjects with curves sum_q xi_q sqrt(lambda_q) phi_q plus noise, where
// phi_1 = sqrt2 sin 2 pi t, phi_2 = sqrt2 cos 2 pi t.
UnivariateSample low_rank_sample(std::size_t n, const std::vector<double>& lambda, double sigma2, int m_min,
                                 int m_max, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(m_min, m_max);
  std::normal_distribution<double> z(0.0, 1.0);
  UnivariateSample out(n);
  for (auto& s : out) {
    const int m = count(rng);
    s.t.resize(m);
    s.y.resize(m);
    for (auto& x : s.t) x = u(rng);
    std::sort(s.t.data(), s.t.data() + m);
    std::vector<double> xi(lambda.size());
    for (std::size_t q = 0; q < lambda.size(); ++q) xi[q] = std::sqrt(lambda[q]) * z(rng);
    for (int j = 0; j < m; ++j) {
      const double a = 2 * std::numbers::pi * s.t[j];
      double v = xi[0] * std::sqrt(2.0) * std::sin(a);
      if (lambda.size() > 1) v += xi[1] * std::sqrt(2.0) * std::cos(a);
      s.y[j] = v + std::sqrt(sigma2) * z(rng);
    }
  }
  return out;
}

}  // namespace

TEST(ReducedRankCov, ScalarCase) {
  const Eigen::MatrixXd c = reduced_rank_cov(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(c(0, 0), 2.5);
}

TEST(ReducedRankCov, VanishingEigenvaluesGiveNoiseOnly) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd phi(4, 2);
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi.data()[i] = n(rng);
  const Eigen::MatrixXd c = reduced_rank_cov(phi, Eigen::VectorXd::Constant(2, 1e-300), 1.0);
  EXPECT_LT((c - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ReducedRankCov, SpectrumOfOrthonormalFactor) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(5, 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  const Eigen::MatrixXd phi = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(5, 2);
  const Eigen::MatrixXd c = reduced_rank_cov(phi, Eigen::Vector2d(3.0, 1.5), 0.1);
  Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues();
  Eigen::VectorXd want(5);
  want << 0.1, 0.1, 0.1, 1.6, 3.1;
  EXPECT_LT((ev - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ReducedRankCov, RejectsNonpositive) {
  EXPECT_THROW(reduced_rank_cov(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, 1.0), 0.0), InvalidArgument);
  EXPECT_THROW(reduced_rank_cov(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, -1.0), 1.0), InvalidArgument);
}

TEST(Nll, ScalarExampleAndGammaDerivative) {
  const BasisSystem b = fourier(1);
  UnivariateSample s(1);
  s[0].t = Eigen::VectorXd::Constant(1, 0.3);
  s[0].y = Eigen::VectorXd::Constant(1, 1.0);
  UnivariateParams p;
  p.beta = Eigen::MatrixXd::Constant(1, 1, 0.7);
  p.eta = Eigen::VectorXd::Zero(1);
  p.gamma = 0.0;
  EXPECT_NEAR(nll(p, s, b), 0.5 + std::log(2.0), 1e-12);
  EXPECT_NEAR(nll_gradient(p, s, b).gamma, 0.25, 1e-12);
}

TEST(Nll, ZeroResidualsLeaveLogDeterminant) {
  std::mt19937_64 rng(3);
  oracle::Instance in = oracle::random_instance(rng, 6, 4, 6, 2);
  for (auto& s : in.sample) s.y.setZero();
  double want = 0.0;
  for (const auto& s : in.sample) {
    const Eigen::MatrixXd phi = oracle::eigenfunctions_at(in.params, in.basis, s.t);
    want += std::log(reduced_rank_cov(phi, in.params.eta.array().exp().matrix(), std::exp(in.params.gamma))
                         .determinant());
  }
  want /= in.sample.size();
  EXPECT_NEAR(nll(in.params, in.sample, in.basis), want, 1e-10 * std::abs(want));
}

TEST(Nll, MatchesDenseGaussianOracle) {
  const oracle::Check c = oracle::check_nll_oracle(20, 11);
  EXPECT_TRUE(c.ok) << c.detail << " worst " << c.worst;
}

TEST(Nll, GradientMatchesFiniteDifferences) {
  const oracle::Check c = oracle::check_gradient(10, 12);
  EXPECT_TRUE(c.ok) << c.detail << " worst " << c.worst;
}

TEST(Nll, InvariantToColumnSignsAndTriangularMixing) {
  std::mt19937_64 rng(4);
  oracle::Instance in = oracle::random_instance(rng, 8, 5, 7, 3);
  const double base = nll(in.params, in.sample, in.basis);
  UnivariateParams flipped = in.params;
  flipped.beta.col(1) *= -1.0;
  EXPECT_NEAR(nll(flipped, in.sample, in.basis), base, 1e-12 * std::abs(base));
  Eigen::Matrix3d r;
  r << 2.0, 0.3, -0.7, 0, 0.5, 1.1, 0, 0, 3.0;
  UnivariateParams mixed = in.params;
  mixed.beta = in.params.beta * r;
  EXPECT_NEAR(nll(mixed, in.sample, in.basis), base, 1e-10 * std::abs(base));
}

TEST(Nll, RejectsEmptySeriesAndOutOfDomainTimes) {
  const BasisSystem b = fourier(3);
  UnivariateSample s(1);
  UnivariateParams p;
  p.beta = Eigen::MatrixXd::Identity(3, 1);
  p.eta = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(nll(p, s, b), InvalidArgument);
  s[0].t = Eigen::VectorXd::Constant(1, 1.5);
  s[0].y = Eigen::VectorXd::Constant(1, 0.0);
  EXPECT_THROW(nll(p, s, b), DomainError);
}

TEST(Pack, RoundTrip) {
  UnivariateParams p;
  p.beta = Eigen::MatrixXd::Random(5, 2);
  p.eta = Eigen::Vector2d(0.3, -0.1);
  p.gamma = -1.25;
  const UnivariateParams q = UnivariateParams::unpack(p.pack(), 5, 2);
  EXPECT_TRUE(q.beta == p.beta);
  EXPECT_TRUE(q.eta == p.eta);
  EXPECT_EQ(q.gamma, p.gamma);
}

TEST(Aic, Arithmetic) { EXPECT_DOUBLE_EQ(aic(2.0, 100, 5, 2), 223.0); }

TEST(Fit, TruthInitRankOne) {
  const UnivariateSample s = low_rank_sample(2000, {2.0}, 1e-3, 3, 6, 21);
  const BasisSystem b = fourier(3);
  UnivariateParams init;
  init.beta = Eigen::MatrixXd::Zero(3, 1);
  init.beta(1, 0) = 1.0;
  init.eta = Eigen::VectorXd::Constant(1, std::log(2.0));
  init.gamma = std::log(1e-3);
  const double start = nll(init, s, b);
  const UnivariateModel m = fit(s, b, 1, {}, init);
  EXPECT_LE(m.nll, start);
  EXPECT_NEAR(m.eigenvalues[0], 2.0, 0.2);
}

TEST(Fit, StationaryAtOptimum) {
  const UnivariateSample s = low_rank_sample(200, {2.0, 0.8}, 0.1, 3, 6, 22);
  const BasisSystem b = fourier(5);
  const UnivariateModel m = fit(s, b, 2);
  const UnivariateParams g = nll_gradient(m.params, s, b);
  EXPECT_LT(g.pack().norm(), 1e-5 * std::max(1.0, std::abs(m.nll)));
}

TEST(Fit, Scenario2NoiseVariance) {
  ScenarioConfig cfg = scenario(2);
  cfg.seed = 1;
  const SimulatedData sim = generate(cfg);
  UnivariateSample s = extract_variable(sim.data, 0);
  for (auto& x : s)
    for (Eigen::Index j = 0; j < x.size(); ++j) x.y[j] -= sim_mean(0, x.t[j]);
  const BasisSystem b = eval_basis({BasisKind::BSpline, 8, 4, kUnit}, build_grid(kUnit, 101));
  const UnivariateModel m = fit(s, b, 3);
  EXPECT_GE(m.noise_variance, 0.15);
  EXPECT_LE(m.noise_variance, 0.35);
}

TEST(Fit, SameSeedBitIdentical) {
  const UnivariateSample s = low_rank_sample(60, {2.0, 0.8}, 0.1, 3, 6, 23);
  const BasisSystem b = eval_basis({BasisKind::BSpline, 6, 4, kUnit}, build_grid(kUnit, 101));
  FitOptions o;
  o.seed = 99;
  const UnivariateModel a = fit(s, b, 2, o), c = fit(s, b, 2, o);
  EXPECT_TRUE(a.params.pack() == c.params.pack());
  EXPECT_TRUE(a.eigenfunctions.values == c.eigenfunctions.values);
}

TEST(Fit, GridOrthonormality) {
  const UnivariateSample s = low_rank_sample(80, {2.0, 0.8}, 0.1, 3, 6, 24);
  const BasisSystem b = eval_basis({BasisKind::BSpline, 7, 4, kUnit}, build_grid(kUnit, 101));
  const UnivariateModel m = fit(s, b, 3);
  const Eigen::MatrixXd& phi = m.eigenfunctions.values;
  const Eigen::MatrixXd g = phi.transpose() * b.grid().weights().asDiagonal() * phi;
  EXPECT_LT((g - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
  for (Eigen::Index q = 1; q < m.eigenvalues.size(); ++q) EXPECT_GE(m.eigenvalues[q - 1], m.eigenvalues[q]);
}

TEST(SelectModel, SinglePairReturnsThatFit) {
  const UnivariateSample s = low_rank_sample(60, {2.0, 0.8}, 0.1, 3, 6, 25);
  SelectionOptions o;
  o.basis_counts = {6};
  o.ranks = {2};
  const SelectionResult r = select_model(s, build_grid(kUnit, 101), o);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.model.basis_count(), 6);
  EXPECT_EQ(r.model.rank(), 2);
  const UnivariateModel direct =
      fit(s, eval_basis({BasisKind::BSpline, 6, 4, kUnit}, build_grid(kUnit, 101)), 2, o.fit);
  EXPECT_EQ(r.model.nll, direct.nll);
}

TEST(SelectModel, PicksAicMinimizer) {
  const UnivariateSample s = low_rank_sample(80, {2.0, 0.8}, 0.1, 3, 6, 26);
  SelectionOptions o;
  o.basis_counts = {5, 6};
  o.ranks = {1, 2};
  const SelectionResult r = select_model(s, build_grid(kUnit, 101), o);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : r.candidates)
    if (c.ok) best = std::min(best, c.aic);
  EXPECT_EQ(aic(r.model), best);
}

TEST(SelectModel, RankTwoDataSelectsTwo) {
  int hits = 0;
  for (unsigned rep = 0; rep < 20; ++rep) {
    const UnivariateSample s = low_rank_sample(100, {3.0, 1.5}, 0.1, 3, 7, 1000 + rep);
    SelectionOptions o;
    o.basis_counts = {5, 6};
    o.ranks = {1, 2, 3};
    hits += select_model(s, build_grid(kUnit, 101), o).model.rank() == 2;
  }
  EXPECT_GE(hits, 16);
}

TEST(SelectModel, RankExceedingBasisRejected) {
  const UnivariateSample s = low_rank_sample(20, {2.0}, 0.1, 3, 6, 27);
  SelectionOptions o;
  o.basis_counts = {2};
  o.ranks = {3};
  EXPECT_THROW(select_model(s, build_grid(kUnit, 101), o), InvalidArgument);
}
