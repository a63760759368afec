#include "smfpca/mfpca.hpp"

#include "smfpca/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace smfpca {

int MultivariateModel::block_offset(std::size_t k) const {
  int off = 0;
  for (std::size_t j = 0; j < k; ++j) off += univariate.at(j).rank();
  return off;
}

namespace {

void check_alignment(const std::vector<ScoreMatrix>& scores) {
  if (scores.empty()) throw InvalidArgument("no score matrices given");
  for (const auto& s : scores) {
    if (s.values.rows() != static_cast<Eigen::Index>(s.subject_ids.size()))
      throw AlignmentError("score rows do not match subject ids for variable '" + s.variable + "'");
    if (s.subject_ids != scores.front().subject_ids)
      throw AlignmentError("variable '" + s.variable + "' lists a different subject set or order");
  }
}

void check_weights(const Eigen::VectorXd& weights, std::size_t p) {
  if (static_cast<std::size_t>(weights.size()) != p) throw InvalidArgument("one weight per variable is required");
  if (!(weights.minCoeff() > 0.0)) throw InvalidArgument("variable weights must be positive");
}

Eigen::MatrixXd stacked_scores(const std::vector<ScoreMatrix>& scores, const Eigen::VectorXd& weights) {
  Eigen::Index cols = 0;
  for (const auto& s : scores) cols += s.values.cols();
  Eigen::MatrixXd x(scores.front().values.rows(), cols);
  Eigen::Index off = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    x.middleCols(off, scores[k].values.cols()) = std::sqrt(weights[static_cast<Eigen::Index>(k)]) * scores[k].values;
    off += scores[k].values.cols();
  }
  return x;
}

int resolve_count(const MultivariateModel& model, std::optional<int> count) {
  const int c = count.value_or(model.truncation);
  if (c < 0 || c > model.total_rank()) throw InvalidArgument("component count out of range");
  return c;
}

}  // namespace

Eigen::MatrixXd build_z(const std::vector<ScoreMatrix>& scores, const Eigen::VectorXd& weights) {
  check_alignment(scores);
  check_weights(weights, scores.size());
  const Eigen::MatrixXd x = stacked_scores(scores, weights);
  const Eigen::Index n = x.rows();
  if (n < 2) throw InvalidArgument("score covariance needs at least two subjects");
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd z = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return 0.5 * (z + z.transpose());
}

SymmetricEigen eigen_z(const Eigen::MatrixXd& z) {
  if (z.rows() != z.cols() || z.rows() == 0) throw InvalidArgument("z must be square and nonempty");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (z + z.transpose()));
  SymmetricEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < out.values.size(); ++j) {
    if (out.values[j] < -1e-8) out.clipped = true;
    if (out.values[j] < 0.0) out.values[j] = 0.0;
    Eigen::Index arg = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.vectors(arg, j) < 0.0) out.vectors.col(j) *= -1.0;
  }
  return out;
}

int cumulative_variance_select(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues, double fraction) {
  if (eigenvalues.size() == 0) throw InvalidArgument("empty spectrum");
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    acc += eigenvalues[j];
    // Relative slack keeps exact ties such as (5, 5, 5) from missing the target.
    if (acc >= fraction * total * (1.0 - 1e-12)) return static_cast<int>(j + 1);
  }
  return static_cast<int>(eigenvalues.size());
}

int elbow_select(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues) {
  const Eigen::Index n = eigenvalues.size();
  if (n == 0) throw InvalidArgument("elbow rule needs a nonempty spectrum");
  if (n == 1) return 1;
  const double first = eigenvalues[0];
  const double last = eigenvalues[n - 1];

  // Near-linear spectrum: least-squares line residual relative to spread.
  const double xbar = 0.5 * static_cast<double>(n + 1);
  const double ybar = eigenvalues.mean();
  double sxy = 0.0, sxx = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double dx = static_cast<double>(j + 1) - xbar;
    sxy += dx * (eigenvalues[j] - ybar);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  double resid2 = 0.0, spread2 = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double fit = ybar + slope * (static_cast<double>(j + 1) - xbar);
    resid2 += (eigenvalues[j] - fit) * (eigenvalues[j] - fit);
    spread2 += (eigenvalues[j] - ybar) * (eigenvalues[j] - ybar);
  }
  const bool near_linear = !(spread2 > 0.0) || std::sqrt(resid2 / spread2) < 0.1;

  const double dx = static_cast<double>(n - 1);
  const double dy = last - first;
  const double norm = std::hypot(dx, dy);
  double best = -1.0;
  int arg = 1;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double dist = std::abs(dy * static_cast<double>(j) - dx * (eigenvalues[j] - first)) / norm;
    if (dist > best) {
      best = dist;
      arg = static_cast<int>(j + 1);
    }
  }
  if (near_linear || best < 1e-9 * std::abs(first)) return cumulative_variance_select(eigenvalues, 0.9);
  return arg;
}

MultivariateModel combine(std::vector<std::string> variable_names, std::vector<UnivariateModel> univariate,
                          std::vector<ScoreMatrix> scores, Eigen::VectorXd weights, std::optional<int> truncation) {
  const std::size_t p = univariate.size();
  if (p == 0) throw InvalidArgument("at least one variable is required");
  if (scores.size() != p || variable_names.size() != p)
    throw InvalidArgument("models, scores and names must have one entry per variable");
  for (std::size_t k = 0; k < p; ++k) {
    if (scores[k].values.cols() != univariate[k].rank())
      throw AlignmentError("score columns do not match the rank of variable '" + variable_names[k] + "'");
  }
  if (weights.size() == 0) weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));

  MultivariateModel model;
  model.z = build_z(scores, weights);
  const SymmetricEigen eig = eigen_z(model.z);
  model.variable_names = std::move(variable_names);
  model.univariate = std::move(univariate);
  model.subject_ids = scores.front().subject_ids;
  model.weights = std::move(weights);
  model.spectrum = eig.values;
  model.eigenvectors_full = eig.vectors;
  if (eig.clipped) model.warnings.push_back("negative eigenvalues of the score covariance were clipped to zero");

  if (truncation) {
    if (*truncation < 1 || *truncation > model.total_rank()) throw InvalidArgument("truncation out of range");
    model.truncation = *truncation;
  } else {
    model.truncation = elbow_select(model.spectrum);
  }
  model.scores = mv_scores(model, scores);
  model.univariate_scores = std::move(scores);

  const Eigen::MatrixXd gram = mv_gram(model);
  const double dev = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-6) {
    std::ostringstream os;
    os << "multivariate eigenfunctions deviate from orthonormality by " << dev;
    model.warnings.push_back(os.str());
  }
  return model;
}

std::vector<Eigen::MatrixXd> mv_eigenfunctions(const MultivariateModel& model,
                                               const std::vector<Eigen::VectorXd>& points,
                                               std::optional<int> count) {
  if (points.size() != model.num_variables()) throw InvalidArgument("one point set per variable is required");
  const int l = resolve_count(model, count);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const UnivariateModel& u = model.univariate[k];
    const Eigen::MatrixXd block = model.eigenvectors_full.block(model.block_offset(k), 0, u.rank(), l);
    const double scale = 1.0 / std::sqrt(model.weights[static_cast<Eigen::Index>(k)]);
    out.push_back(scale * (u.eigenfunctions_at(points[k]) * block));
  }
  return out;
}

Eigen::MatrixXd mv_scores(const MultivariateModel& model, const std::vector<ScoreMatrix>& scores,
                          std::optional<int> count) {
  check_alignment(scores);
  if (scores.size() != model.num_variables()) throw AlignmentError("one score matrix per variable is required");
  const int l = resolve_count(model, count);
  const Eigen::MatrixXd x = stacked_scores(scores, model.weights);
  if (x.cols() != model.total_rank()) throw AlignmentError("stacked scores do not match the model's blocks");
  return x * model.eigenvectors_full.leftCols(l);
}

Eigen::MatrixXd mv_gram(const MultivariateModel& model, std::optional<int> count) {
  const int l = resolve_count(model, count);
  std::vector<Eigen::VectorXd> grids;
  for (const auto& u : model.univariate) grids.push_back(u.grid().points());
  const std::vector<Eigen::MatrixXd> psi = mv_eigenfunctions(model, grids, l);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(l, l);
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const Eigen::VectorXd& w = model.univariate[k].grid().weights();
    gram += model.weights[static_cast<Eigen::Index>(k)] * (psi[k].transpose() * w.asDiagonal() * psi[k]);
  }
  return gram;
}

Eigen::MatrixXd reconstruct_covariance(const MultivariateModel& model, std::size_t k,
                                       const Eigen::Ref<const Eigen::VectorXd>& s, std::size_t k2,
                                       const Eigen::Ref<const Eigen::VectorXd>& t, std::optional<int> count) {
  if (k >= model.num_variables() || k2 >= model.num_variables()) throw InvalidArgument("variable index out of range");
  const int l = resolve_count(model, count);
  std::vector<Eigen::VectorXd> pts(model.num_variables(), Eigen::VectorXd(0));
  pts[k] = s;
  const Eigen::MatrixXd psi_s = mv_eigenfunctions(model, pts, l)[k];
  pts.assign(model.num_variables(), Eigen::VectorXd(0));
  pts[k2] = t;
  const Eigen::MatrixXd psi_t = mv_eigenfunctions(model, pts, l)[k2];
  // Fixed summation order with sqrt(eta) folded into both factors, so
  // swapping (k, s) with (k2, t) gives the exact transpose.
  const Eigen::ArrayXd root = model.spectrum.head(l).array().sqrt();
  const Eigen::MatrixXd a = psi_s * root.matrix().asDiagonal();
  const Eigen::MatrixXd b = psi_t * root.matrix().asDiagonal();
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double sum = 0.0;
      for (Eigen::Index q = 0; q < l; ++q) sum += a(i, q) * b(j, q);
      c(i, j) = sum;
    }
  return c;
}

std::vector<Eigen::MatrixXd> reconstruct_centered_curves(const MultivariateModel& model,
                                                         const std::vector<Eigen::VectorXd>& points) {
  const std::vector<Eigen::MatrixXd> psi = mv_eigenfunctions(model, points);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(psi.size());
  for (const auto& block : psi) out.push_back(model.scores * block.transpose());
  return out;
}

std::vector<Eigen::MatrixXd> reconstruct_curves(const MultivariateModel& model,
                                                const std::vector<Eigen::VectorXd>& points) {
  std::vector<Eigen::MatrixXd> out = reconstruct_centered_curves(model, points);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Eigen::RowVectorXd mu = model.univariate[k].mean.evaluate(points[k]).transpose();
    out[k].rowwise() += mu;
  }
  return out;
}

}  // namespace smfpca
