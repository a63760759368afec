#include "oracles.hpp"

#include "smfpca/metrics.hpp"
#include "smfpca/scoring.hpp"
#include "smfpca/simgen.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace oracle {

Instance random_instance(std::mt19937_64& rng, int subjects, int max_obs, int basis_count, int rank,
                         std::size_t grid_size) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, max_obs);

  Instance in;
  in.basis = smfpca::eval_basis({smfpca::BasisKind::BSpline, basis_count, 4, {0.0, 1.0}},
                                smfpca::build_grid({0.0, 1.0}, grid_size));
  for (int i = 0; i < subjects; ++i) {
    smfpca::SubjectSeries s;
    const int m = count(rng);
    s.t.resize(m);
    s.y.resize(m);
    for (int j = 0; j < m; ++j) s.t[j] = unit(rng);
    std::sort(s.t.data(), s.t.data() + m);
    for (int j = 0; j < m; ++j) s.y[j] = 1.5 * normal(rng);
    in.sample.push_back(s);
  }
  in.params.beta.resize(basis_count, rank);
  for (Eigen::Index k = 0; k < in.params.beta.size(); ++k) in.params.beta.data()[k] = normal(rng);
  in.params.eta.resize(rank);
  for (int q = 0; q < rank; ++q) in.params.eta[q] = 0.8 * normal(rng);
  in.params.gamma = -1.0 + 0.5 * normal(rng);
  return in;
}

Eigen::MatrixXd grid_eigenfunctions(const smfpca::UnivariateParams& p, const smfpca::BasisSystem& basis) {
  const Eigen::VectorXd sw = basis.grid().weights().cwiseSqrt();
  const Eigen::MatrixXd a = sw.asDiagonal() * (basis.eval_matrix() * p.beta);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return sw.cwiseInverse().asDiagonal() * q;
}

Eigen::MatrixXd eigenfunctions_at(const smfpca::UnivariateParams& p, const smfpca::BasisSystem& basis,
                                  const Eigen::VectorXd& t) {
  const Eigen::MatrixXd phi = grid_eigenfunctions(p, basis);
  const Eigen::MatrixXd& b = basis.eval_matrix();
  const Eigen::VectorXd& w = basis.grid().weights();
  const Eigen::MatrixXd g = b.transpose() * w.asDiagonal() * b;
  const Eigen::MatrixXd coef = g.ldlt().solve(b.transpose() * w.asDiagonal() * phi);
  return basis.evaluate(t) * coef;
}

double dense_nll(const smfpca::UnivariateParams& p, const smfpca::UnivariateSample& sample,
                 const smfpca::BasisSystem& basis) {
  const Eigen::VectorXd lambda = p.eta.array().exp();
  const double sigma2 = std::exp(p.gamma);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : sample) {
    if (s.size() == 0) continue;
    ++n;
    const Eigen::MatrixXd phi = eigenfunctions_at(p, basis, s.t);
    const Eigen::Index m = s.size();
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(m, m) * sigma2;
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index q = 0; q < phi.cols(); ++q) c(a, b) += lambda[q] * phi(a, q) * phi(b, q);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(c);
    const double logdet = lu.matrixLU().diagonal().array().abs().log().sum();
    const double quad = s.y.dot(lu.solve(s.y));
    const double neg_log_density = 0.5 * (quad + logdet + static_cast<double>(m) * std::log(2 * std::numbers::pi));
    total += 2.0 * neg_log_density - static_cast<double>(m) * std::log(2 * std::numbers::pi);
  }
  return total / static_cast<double>(n);
}

Eigen::VectorXd fd_gradient(const smfpca::UnivariateParams& p, const smfpca::UnivariateSample& sample,
                            const smfpca::BasisSystem& basis, double step) {
  const Eigen::VectorXd x = p.pack();
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fp = smfpca::nll(smfpca::UnivariateParams::unpack(xp, p.basis_count(), p.rank()), sample, basis);
    const double fm = smfpca::nll(smfpca::UnivariateParams::unpack(xm, p.basis_count(), p.rank()), sample, basis);
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

Eigen::VectorXd conditioned_scores(const Eigen::MatrixXd& phi, const Eigen::VectorXd& lambda, double sigma2,
                                   const Eigen::VectorXd& y) {
  const Eigen::Index mm = lambda.size();
  const Eigen::Index m = y.size();
  // Joint covariance of (xi, y) with y = phi xi + e.
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(mm + m, mm + m);
  Eigen::MatrixXd lift(m + mm, mm);  // (xi, y) = lift * xi + (0, e)
  lift.topRows(mm) = Eigen::MatrixXd::Identity(mm, mm);
  lift.bottomRows(m) = phi;
  joint = lift * lambda.asDiagonal() * lift.transpose();
  joint.bottomRightCorner(m, m) += sigma2 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd s12 = joint.topRightCorner(mm, m);
  const Eigen::MatrixXd s22 = joint.bottomRightCorner(m, m);
  return s12 * s22.fullPivLu().solve(y);
}

double loop_rmse_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) acc += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  return std::sqrt(acc / static_cast<double>(a.rows() * a.cols()));
}

double loop_rmse_eigenfunction(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double minus = 0.0, plus = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    minus += (a[i] - b[i]) * (a[i] - b[i]);
    plus += (a[i] + b[i]) * (a[i] + b[i]);
  }
  const double n = static_cast<double>(a.size());
  return std::min(std::sqrt(minus / n), std::sqrt(plus / n));
}

double loop_rse(double est, double truth) { return (est - truth) * (est - truth) / (truth * truth); }

double loop_rmse_recon(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return loop_rmse_cov(a, b); }

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void note(Check& c, double err, double tol, const std::string& what) {
  ++c.cases;
  if (err > c.worst) c.worst = err;
  if (!(err <= tol) && c.ok) {
    c.ok = false;
    c.detail = what;
  }
}

}  // namespace

Check check_nll_oracle(std::size_t instances, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  Check c;
  for (std::size_t k = 0; k < instances; ++k) {
    const int u = 5 + static_cast<int>(k % 4);
    const int m = 1 + static_cast<int>(k % 3);
    const Instance in = random_instance(rng, 5 + static_cast<int>(k % 6), 4 + static_cast<int>(k % 3), u, m);
    const double a = smfpca::nll(in.params, in.sample, in.basis);
    const double b = dense_nll(in.params, in.sample, in.basis);
    note(c, rel_err(a, b), tol, "instance " + std::to_string(k));
  }
  return c;
}

Check check_gradient(std::size_t points, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  Check c;
  for (std::size_t k = 0; k < points; ++k) {
    const int u = 5 + static_cast<int>(k % 4);
    const int m = 1 + static_cast<int>(k % 3);
    const Instance in = random_instance(rng, 10, 6, u, m);
    const Eigen::VectorXd g = smfpca::nll_gradient(in.params, in.sample, in.basis).pack();
    const Eigen::VectorXd fd = fd_gradient(in.params, in.sample, in.basis);
    const double err = (g - fd).norm() / std::max({g.norm(), fd.norm(), 1e-12});
    note(c, err, tol, "point " + std::to_string(k));
  }
  return c;
}

Check check_scoring_oracle(std::size_t subjects, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  Check c;
  smfpca::FitOptions fo;
  fo.bfgs.max_iterations = 60;
  for (std::size_t k = 0; c.cases < subjects; ++k) {
    const int m = 1 + static_cast<int>(k % 3);
    Instance in = random_instance(rng, 25, 6, 6, m);
    const smfpca::UnivariateModel model = smfpca::fit(in.sample, in.basis, m, fo, in.params);
    for (std::size_t i = 0; i < in.sample.size() && c.cases < subjects; ++i) {
      const auto& s = in.sample[i];
      const Eigen::VectorXd got = smfpca::subject_scores(model, s);
      const Eigen::VectorXd want =
          conditioned_scores(model.eigenfunctions_at(s.t), model.eigenvalues, model.noise_variance, s.y);
      const double err = (got - want).norm() / std::max(want.norm(), 1e-300);
      note(c, err, tol, "instance " + std::to_string(k) + " subject " + std::to_string(i));
    }
  }
  return c;
}

Check check_metric_oracles(std::size_t instances, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto rnd = [&](Eigen::Index r, Eigen::Index cc) {
    Eigen::MatrixXd m(r, cc);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  Check c;
  for (std::size_t k = 0; k < instances; ++k) {
    const Eigen::Index g = 3 + static_cast<Eigen::Index>(k % 7);
    const Eigen::MatrixXd a = rnd(g, g), b = rnd(g, g);
    note(c, rel_err(smfpca::rmse_cov(a, b), loop_rmse_cov(a, b)), tol, "rmse_cov " + std::to_string(k));
    const Eigen::VectorXd u = rnd(g, 1), v = rnd(g, 1);
    note(c, rel_err(smfpca::rmse_eigenfunction(u, v), loop_rmse_eigenfunction(u, v)), tol,
         "rmse_eigenfunction " + std::to_string(k));
    const double e = std::abs(normal(rng)) + 0.1, t = std::abs(normal(rng)) + 0.1;
    note(c, rel_err(smfpca::rse_eigenvalue(e, t), loop_rse(e, t)), tol, "rse " + std::to_string(k));
    const Eigen::MatrixXd x = rnd(4, g), y = rnd(4, g);
    note(c, rel_err(smfpca::rmse_reconstruction(x, y), loop_rmse_recon(x, y)), tol, "rmse_recon " + std::to_string(k));
  }
  return c;
}

Check check_simgen_truth(double tol) {
  Check c;
  const smfpca::TrueEigen zero = smfpca::true_mv_eigen(0.0);
  std::vector<double> expected{3, 1.5, 0.75, 3.5, 1.75, 0.5, 2.5, 2, 1};
  std::sort(expected.rbegin(), expected.rend());
  for (int l = 0; l < 9; ++l)
    note(c, std::abs(zero.values[l] - expected[static_cast<std::size_t>(l)]), tol, "eigenvalue " + std::to_string(l + 1));
  for (double rho : {0.0, 0.5, 0.9}) {
    const smfpca::TrueEigen e = smfpca::true_mv_eigen(rho);
    std::ostringstream os;
    os << "trace at rho " << rho;
    note(c, std::abs(e.values.sum() - 16.5), tol, os.str());
  }
  return c;
}

Check check_determinism(int scenario, std::size_t replicates, std::size_t threads, std::uint64_t seed) {
  smfpca::ScenarioConfig cfg = smfpca::scenario(scenario);
  cfg.seed = seed;
  smfpca::BenchmarkOptions serial;
  serial.pipeline.selection.fit.seed = seed;
  serial.threads = 1;
  smfpca::BenchmarkOptions parallel = serial;
  parallel.threads = threads;
  const std::string a = smfpca::report_json(smfpca::run_benchmark(cfg, replicates, serial), false);
  const std::string b = smfpca::report_json(smfpca::run_benchmark(cfg, replicates, parallel), false);
  Check c;
  c.cases = 1;
  c.ok = a == b;
  c.worst = c.ok ? 0.0 : 1.0;
  if (!c.ok) c.detail = "reports differ between 1 and " + std::to_string(threads) + " threads";
  return c;
}

}  // namespace oracle
