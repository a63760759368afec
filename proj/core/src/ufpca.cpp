#include "smfpca/ufpca.hpp"

#include "smfpca/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace smfpca {

Eigen::VectorXd UnivariateParams::pack() const {
  Eigen::VectorXd x(size());
  x.head(beta.size()) = Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
  x.segment(beta.size(), eta.size()) = eta;
  x[x.size() - 1] = gamma;
  return x;
}

UnivariateParams UnivariateParams::unpack(const Eigen::Ref<const Eigen::VectorXd>& x, int basis_count, int rank) {
  const Eigen::Index nb = static_cast<Eigen::Index>(basis_count) * rank;
  if (x.size() != nb + rank + 1) throw InvalidArgument("packed parameter vector has the wrong length");
  UnivariateParams p;
  p.beta = Eigen::Map<const Eigen::MatrixXd>(x.data(), basis_count, rank);
  p.eta = x.segment(nb, rank);
  p.gamma = x[x.size() - 1];
  return p;
}

Eigen::MatrixXd UnivariateModel::eigenfunctions_at(const Eigen::Ref<const Eigen::VectorXd>& t) const {
  return evaluate_continuous(eigenfunctions, basis, t);
}

Eigen::MatrixXd reduced_rank_cov(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                 const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, double noise_variance) {
  if (phi.cols() != eigenvalues.size()) throw InvalidArgument("eigenfunction columns do not match eigenvalues");
  if (!(noise_variance > 0.0) || (eigenvalues.size() > 0 && !(eigenvalues.minCoeff() > 0.0)))
    throw InvalidArgument("eigenvalues and noise variance must be positive");
  Eigen::MatrixXd c = phi * eigenvalues.asDiagonal() * phi.transpose();
  c.diagonal().array() += noise_variance;
  return 0.5 * (c + c.transpose());
}

NllObjective::NllObjective(const UnivariateSample& centered, const BasisSystem& basis) : basis_(&basis) {
  const Eigen::MatrixXd& gis = basis.grid_gram_inv_sqrt();
  projector_ = gis * (gis * (basis.eval_matrix().transpose() * basis.grid().weights().asDiagonal()));
  subjects_.reserve(centered.size());
  for (const auto& s : centered) {
    if (s.size() == 0) throw InvalidArgument("likelihood requires at least one observation per subject");
    subjects_.push_back(Subject{basis.evaluate(s.t), s.y});
  }
  if (subjects_.empty()) throw InsufficientData("likelihood needs at least one subject");
}

double NllObjective::value(const UnivariateParams& params) const { return evaluate(params, nullptr); }

double NllObjective::value_and_gradient(const UnivariateParams& params, UnivariateParams& grad) const {
  return evaluate(params, &grad);
}

double NllObjective::operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad, int rank) const {
  const UnivariateParams p = UnivariateParams::unpack(x, basis_->count(), rank);
  UnivariateParams g;
  double f;
  try {
    f = evaluate(p, &g);
  } catch (const RankDeficiency&) {
    // Collapsed eigenfunction span: report +inf so the line search backs off.
    grad.setConstant(std::numeric_limits<double>::quiet_NaN());
    return std::numeric_limits<double>::infinity();
  }
  grad = g.pack();
  return f;
}

double NllObjective::evaluate(const UnivariateParams& params, UnivariateParams* grad) const {
  const int u = basis_->count();
  const int m = params.rank();
  if (params.basis_count() != u || params.eta.size() != m)
    throw InvalidArgument("parameter shapes do not match the basis");

  const Eigen::MatrixXd raw = basis_->eval_matrix() * params.beta;
  const MgsFactor factor = weighted_mgs_factor(raw, basis_->grid().weights());
  const Eigen::MatrixXd coeffs = projector_ * factor.q;  // U x M
  const Eigen::VectorXd lambda = params.eta.array().exp();
  const double sigma2 = std::exp(params.gamma);

  Eigen::MatrixXd coeffs_bar;
  Eigen::VectorXd lambda_bar;
  double sigma2_bar = 0.0;
  if (grad) {
    coeffs_bar = Eigen::MatrixXd::Zero(u, m);
    lambda_bar = Eigen::VectorXd::Zero(m);
  }

  double total = 0.0;
  for (const auto& s : subjects_) {
    const Eigen::MatrixXd phi = s.design * coeffs;
    const Eigen::MatrixXd c = reduced_rank_cov(phi, lambda, sigma2);
    const Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw DivergedError("subject covariance lost positive definiteness");
    const Eigen::VectorXd alpha = llt.solve(s.y);
    const auto& l = llt.matrixLLT();
    total += s.y.dot(alpha) + 2.0 * l.diagonal().array().log().sum();
    if (grad) {
      // dL/dC = C^{-1} - C^{-1} y y^T C^{-1}
      Eigen::MatrixXd k = llt.solve(Eigen::MatrixXd::Identity(c.rows(), c.cols()));
      k.noalias() -= alpha * alpha.transpose();
      const Eigen::MatrixXd kphi = k * phi;
      coeffs_bar.noalias() += s.design.transpose() * (2.0 * kphi * lambda.asDiagonal());
      lambda_bar += (phi.array() * kphi.array()).colwise().sum().transpose().matrix();
      sigma2_bar += k.trace();
    }
  }
  const double inv_n = 1.0 / static_cast<double>(subjects_.size());
  if (grad) {
    const Eigen::MatrixXd q_bar = projector_.transpose() * (inv_n * coeffs_bar);
    const Eigen::MatrixXd raw_bar = weighted_mgs_backward(factor, basis_->grid().weights(), q_bar);
    grad->beta = basis_->eval_matrix().transpose() * raw_bar;
    grad->eta = inv_n * lambda.cwiseProduct(lambda_bar);
    grad->gamma = inv_n * sigma2 * sigma2_bar;
  }
  return inv_n * total;
}

double nll(const UnivariateParams& params, const UnivariateSample& centered, const BasisSystem& basis) {
  return NllObjective(centered, basis).value(params);
}

UnivariateParams nll_gradient(const UnivariateParams& params, const UnivariateSample& centered,
                              const BasisSystem& basis) {
  UnivariateParams g;
  NllObjective(centered, basis).value_and_gradient(params, g);
  return g;
}

namespace {

double pooled_variance(const UnivariateSample& sample) {
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& s : sample) {
    sum += s.y.sum();
    sum2 += s.y.squaredNorm();
    n += static_cast<std::size_t>(s.size());
  }
  if (n < 2) return 1.0;
  const double mean = sum / static_cast<double>(n);
  const double var = (sum2 - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
  return var > 1e-12 ? var : 1.0;
}

void default_variance_params(const UnivariateSample& sample, int rank, UnivariateParams& p) {
  const double v = pooled_variance(sample);
  p.eta.resize(rank);
  const double hi = std::log(v / 2.0);
  const double lo = std::log(v / 20.0);
  for (int q = 0; q < rank; ++q) p.eta[q] = rank == 1 ? hi : hi + (lo - hi) * q / (rank - 1);
  p.gamma = std::log(0.1 * v);
}

// Leading eigen-directions (U x U, descending) of the covariance surface
// sum_ab S_ab B_a(s) B_b(t) fitted by least squares to within-subject
// products y_j y_l (j != l). Returns an empty matrix when unusable.
Eigen::MatrixXd smoother_directions(const UnivariateSample& sample, const BasisSystem& basis) {
  const int u = basis.count();
  const int uu = u * u;
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(uu, uu);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(uu);
  std::size_t pairs = 0;
  Eigen::VectorXd d(uu);
  for (const auto& s : sample) {
    if (s.size() < 2) continue;
    const Eigen::MatrixXd b = basis.evaluate(s.t);
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      for (Eigen::Index l = 0; l < s.size(); ++l) {
        if (j == l) continue;
        for (int c = 0; c < u; ++c) d.segment(c * u, u) = b(l, c) * b.row(j).transpose();
        normal.selfadjointView<Eigen::Lower>().rankUpdate(d);
        rhs += (s.y[j] * s.y[l]) * d;
        ++pairs;
      }
    }
  }
  if (pairs == 0) return {};
  normal = normal.selfadjointView<Eigen::Lower>();
  const double ridge = 1e-6 * normal.trace() / uu + 1e-12;
  normal.diagonal().array() += ridge;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) return {};
  const Eigen::VectorXd sv = ldlt.solve(rhs);
  if (!sv.allFinite()) return {};
  Eigen::MatrixXd surface = Eigen::Map<const Eigen::MatrixXd>(sv.data(), u, u);
  surface = 0.5 * (surface + surface.transpose());

  // Operator eigenproblem under the L2 Gram: G^{1/2} S G^{1/2} v = lambda v.
  const Eigen::MatrixXd& gis = basis.gram_inv_sqrt();
  const Eigen::MatrixXd gsqrt = gis.inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gsqrt * surface * gsqrt);
  if (es.info() != Eigen::Success) return {};
  Eigen::MatrixXd directions = gis * es.eigenvectors().rowwise().reverse();
  if (!directions.allFinite()) return {};
  return directions;
}

UnivariateParams params_from_directions(const UnivariateSample& sample, const Eigen::MatrixXd& directions,
                                        int rank) {
  UnivariateParams p;
  p.beta = directions.leftCols(rank);
  default_variance_params(sample, rank, p);
  return p;
}

UnivariateModel build_model(const UnivariateParams& params, const BfgsResult& result, const NllObjective& objective,
                            const BasisSystem& basis) {
  UnivariateModel model;
  model.params = params;
  model.basis = basis;
  model.mean = zero_mean(basis);
  model.status = result.status;
  model.iterations = result.iterations;
  model.subject_count = objective.subject_count();
  model.nll = objective.value(params);

  const int m = params.rank();
  const Eigen::VectorXd lambda = params.eta.array().exp();
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lambda[a] > lambda[b]; });

  const MgsFactor factor = weighted_mgs_factor(basis.eval_matrix() * params.beta, basis.grid().weights());
  Eigen::MatrixXd phi(factor.q.rows(), m);
  model.eigenvalues.resize(m);
  for (int q = 0; q < m; ++q) {
    phi.col(q) = factor.q.col(order[static_cast<std::size_t>(q)]);
    model.eigenvalues[q] = lambda[order[static_cast<std::size_t>(q)]];
  }
  canonicalize_signs(phi);
  model.eigenfunctions = continuous_representation(OrthonormalSet{std::move(phi), {}}, basis);
  model.noise_variance = std::exp(params.gamma);
  return model;
}

}  // namespace

UnivariateParams random_params(const UnivariateSample& centered, int basis_count, int rank, std::uint64_t seed) {
  PhiloxStream rng(seed, 0xB0u, static_cast<std::uint32_t>(basis_count), static_cast<std::uint32_t>(rank));
  UnivariateParams p;
  p.beta.resize(basis_count, rank);
  for (Eigen::Index c = 0; c < p.beta.cols(); ++c)
    for (Eigen::Index r = 0; r < p.beta.rows(); ++r) p.beta(r, c) = 0.1 * rng.normal();
  default_variance_params(centered, rank, p);
  return p;
}

UnivariateParams initial_params(const UnivariateSample& centered, const BasisSystem& basis, int rank,
                                std::uint64_t seed) {
  if (rank < 1 || rank > basis.count()) throw InvalidArgument("rank must lie in [1, U]");
  const UnivariateSample data = nonempty(centered);
  const Eigen::MatrixXd directions = smoother_directions(data, basis);
  if (directions.size() == 0) return random_params(data, basis.count(), rank, seed);
  return params_from_directions(data, directions, rank);
}

UnivariateModel fit(const UnivariateSample& centered, const BasisSystem& basis, int rank, const FitOptions& options,
                    std::optional<UnivariateParams> init) {
  if (rank < 1 || rank > basis.count())
    throw InvalidArgument("rank " + std::to_string(rank) + " must lie in [1, " + std::to_string(basis.count()) + "]");
  const UnivariateSample data = nonempty(centered);
  if (data.empty()) throw InsufficientData("no subject has observations for this variable");
  const NllObjective objective(data, basis);
  const auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return objective(x, g, rank); };

  UnivariateParams start = init ? *init : initial_params(data, basis, rank, options.seed);
  if (start.basis_count() != basis.count() || start.rank() != rank)
    throw InvalidArgument("initial parameters do not match (U, M)");

  std::optional<UnivariateModel> best;
  bool any_converged = false;
  for (int attempt = 0; attempt <= options.restarts; ++attempt) {
    if (attempt > 0) start = random_params(data, basis.count(), rank, derive_seed(options.seed, 0xA11u, attempt));
    const BfgsResult result = minimize_bfgs(fn, start.pack(), options.bfgs);
    const UnivariateParams params = UnivariateParams::unpack(result.x, basis.count(), rank);
    UnivariateModel model = build_model(params, result, objective, basis);
    const bool stalled = result.status == BfgsStatus::LineSearchFailed;
    any_converged = any_converged || !stalled;
    if (!best || model.nll < best->nll) best = std::move(model);
    if (!stalled) break;
  }
  if (!any_converged) {
    std::ostringstream os;
    os << "line search failed in every attempt (U=" << basis.count() << ", M=" << rank << ")";
    throw OptimizerStalled(os.str(), std::move(*best));
  }
  return std::move(*best);
}

double aic(double nll_value, std::size_t n, int basis_count, int rank) {
  if (rank < 1) throw InvalidArgument("AIC requires at least one component");
  return static_cast<double>(n) * nll_value + static_cast<double>(basis_count) * rank * rank + rank + 1.0;
}

double aic(const UnivariateModel& model) {
  return aic(model.nll, model.subject_count, model.basis_count(), model.rank());
}

SelectionResult select_model(const UnivariateSample& centered, const QuadratureGrid& grid,
                             const SelectionOptions& options) {
  if (options.basis_counts.empty() || options.ranks.empty()) throw InvalidArgument("selection ranges must be nonempty");
  const int max_rank = *std::max_element(options.ranks.begin(), options.ranks.end());
  const int min_count = *std::min_element(options.basis_counts.begin(), options.basis_counts.end());
  if (max_rank > min_count) throw InvalidArgument("largest rank exceeds smallest basis count");
  if (*std::min_element(options.ranks.begin(), options.ranks.end()) < 1)
    throw InvalidArgument("ranks must be positive");

  const UnivariateSample data = nonempty(centered);
  SelectionResult out;
  std::optional<UnivariateModel> best;
  double best_aic = std::numeric_limits<double>::infinity();
  std::vector<FailureRecord> failures;

  for (int u : options.basis_counts) {
    std::optional<BasisSystem> basis;
    Eigen::MatrixXd directions;
    std::string basis_error;
    try {
      basis = eval_basis(BasisSpec{options.kind, u, options.order, grid.domain()}, grid);
      directions = smoother_directions(data, *basis);
    } catch (const Error& e) {
      basis_error = std::string(e.kind()) + ": " + e.what();
    }
    for (int m : options.ranks) {
      CandidateSummary cand{u, m, false, 0.0, 0.0, {}};
      const std::string label = "U=" + std::to_string(u) + ",M=" + std::to_string(m);
      if (!basis) {
        cand.error = basis_error;
        failures.push_back({label, "basis", basis_error});
        out.candidates.push_back(cand);
        continue;
      }
      try {
        FitOptions fo = options.fit;
        fo.seed = derive_seed(options.fit.seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(m));
        std::optional<UnivariateParams> start;
        if (directions.size() > 0) start = params_from_directions(data, directions, m);
        UnivariateModel model = fit(data, *basis, m, fo, start);
        cand.ok = true;
        cand.nll = model.nll;
        cand.aic = aic(model);
        const bool better = !best || cand.aic < best_aic ||
                            (cand.aic == best_aic && (m < best->rank() || (m == best->rank() && u < best->basis_count())));
        if (better) {
          best_aic = cand.aic;
          best = std::move(model);
        }
      } catch (const Error& e) {
        cand.error = std::string(e.kind()) + ": " + e.what();
        failures.push_back({label, e.kind(), e.what()});
      }
      out.candidates.push_back(cand);
    }
  }
  if (!best) throw SelectionFailed(std::move(failures));
  out.model = std::move(*best);
  return out;
}

}  // namespace smfpca
