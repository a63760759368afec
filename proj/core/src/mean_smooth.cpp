#include "smfpca/mean_smooth.hpp"

#include "smfpca/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace smfpca {

double MeanModel::evaluate(double t) const { return basis.evaluate(t).dot(coeffs); }

Eigen::VectorXd MeanModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& t) const {
  return basis.evaluate(t) * coeffs;
}

std::vector<double> mean_smoothing_ladder() {
  std::vector<double> ladder(25);
  for (int j = 0; j < 25; ++j) ladder[static_cast<std::size_t>(j)] = std::pow(10.0, -8.0 + 10.0 * j / 24.0);
  return ladder;
}

namespace {

Eigen::MatrixXd roughness_penalty(const BasisSystem& basis) {
  const int u = basis.count();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(u, u);
  if (basis.kind() == BasisKind::Fourier) {
    for (int j = 1; j < u; ++j) {
      const double k = static_cast<double>((j + 1) / 2);
      p(j, j) = k * k * k * k;
    }
  } else if (u >= 3) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(u - 2, u);
    for (int r = 0; r < u - 2; ++r) {
      d(r, r) = 1.0;
      d(r, r + 1) = -2.0;
      d(r, r + 2) = 1.0;
    }
    p = d.transpose() * d;
  }
  const double scale = p.cwiseAbs().maxCoeff();
  if (scale > 0.0) p /= scale;
  return p;
}

}  // namespace

MeanModel fit_mean(std::span<const double> t, std::span<const double> y, const BasisSystem& basis) {
  if (t.size() != y.size()) throw InvalidArgument("time and value vectors differ in length");
  std::vector<double> sorted(t.begin(), t.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  if (distinct < basis.count())
    throw InsufficientData("mean fit needs at least " + std::to_string(basis.count()) +
                           " distinct time points, got " + std::to_string(distinct));

  const auto n = static_cast<Eigen::Index>(t.size());
  const Eigen::Map<const Eigen::VectorXd> tv(t.data(), n);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::MatrixXd b = basis.evaluate(tv);
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd btb = inv_n * (b.transpose() * b);
  const Eigen::VectorXd bty = inv_n * (b.transpose() * yv);
  const Eigen::MatrixXd pen = roughness_penalty(basis);

  MeanModel best{basis, Eigen::VectorXd::Zero(basis.count()), 0.0};
  double best_gcv = std::numeric_limits<double>::infinity();
  for (double lambda : mean_smoothing_ladder()) {
    const Eigen::MatrixXd a = btb + lambda * pen;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd c = ldlt.solve(bty);
    const double rss = (yv - b * c).squaredNorm();
    const double edf = ldlt.solve(btb).trace();
    const double denom = static_cast<double>(n) - edf;
    if (!(denom > 0.0) || !std::isfinite(rss)) continue;
    const double gcv = static_cast<double>(n) * rss / (denom * denom);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best.coeffs = c;
      best.smoothing = lambda;
    }
  }
  if (!std::isfinite(best_gcv)) throw InsufficientData("mean fit is underdetermined for every smoothing level");
  return best;
}

MeanModel fit_mean(const UnivariateSample& sample, const BasisSystem& basis) {
  std::vector<double> t, y;
  for (const auto& s : sample) {
    t.insert(t.end(), s.t.data(), s.t.data() + s.t.size());
    y.insert(y.end(), s.y.data(), s.y.data() + s.y.size());
  }
  return fit_mean(t, y, basis);
}

MeanModel zero_mean(const BasisSystem& basis) {
  return MeanModel{basis, Eigen::VectorXd::Zero(basis.count()), 0.0};
}

SparseDataset center(const SparseDataset& data, const std::vector<MeanModel>& means) {
  if (means.size() < data.num_variables())
    throw MissingModel("variable '" + data.variables[means.size()].name + "' has no mean model");
  SparseDataset out = data;
  for (auto& subj : out.subjects) {
    for (std::size_t k = 0; k < out.num_variables(); ++k) {
      for (auto& obs : subj.series[k]) obs.y -= means[k].evaluate(obs.t);
    }
  }
  return out;
}

}  // namespace smfpca
