#include "smfpca/scoring.hpp"

#include "smfpca/errors.hpp"

#include <Eigen/Cholesky>

namespace smfpca {

Eigen::VectorXd subject_scores(const UnivariateModel& model, const SubjectSeries& centered) {
  const int m = model.rank();
  if (centered.size() == 0) return Eigen::VectorXd::Zero(m);
  const Eigen::MatrixXd phi = model.eigenfunctions_at(centered.t);
  const Eigen::MatrixXd c = reduced_rank_cov(phi, model.eigenvalues, model.noise_variance);
  const Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw DivergedError("subject covariance is not positive definite");
  return model.eigenvalues.asDiagonal() * (phi.transpose() * llt.solve(centered.y));
}

Eigen::MatrixXd conditional_scores(const UnivariateModel& model, const UnivariateSample& centered) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(centered.size()), model.rank());
  for (std::size_t i = 0; i < centered.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = subject_scores(model, centered[i]).transpose();
  return out;
}

ScoreMatrix conditional_scores(const UnivariateModel& model, const UnivariateSample& centered,
                               std::vector<std::string> subject_ids, std::string variable) {
  if (subject_ids.size() != centered.size()) throw AlignmentError("subject ids do not match the sample");
  ScoreMatrix s;
  s.values = conditional_scores(model, centered);
  s.subject_ids = std::move(subject_ids);
  s.variable = std::move(variable);
  s.underdetermined.resize(centered.size());
  for (std::size_t i = 0; i < centered.size(); ++i)
    s.underdetermined[i] = centered[i].size() < model.rank();
  return s;
}

}  // namespace smfpca
