#include "smfpca/simgen.hpp"

#include "smfpca/errors.hpp"
#include "smfpca/grid_basis.hpp"
#include "smfpca/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace smfpca {

namespace {

constexpr double kPi = std::numbers::pi;

// Stream channels within one subject's address.
constexpr std::uint32_t kScoreChannel = 0;
constexpr std::uint32_t kVariableChannel = 1;

void check_variable(int k) {
  if (k < 0 || k >= kSimVariables) throw InvalidArgument("simulation variable index out of range");
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("simulation time outside [0, 1]");
}

Eigen::Vector3d basis_row(int k, double t) {
  const double r = std::numbers::sqrt2;
  switch (k) {
    case 0:
      return {r * std::sin(2 * kPi * t), r * std::cos(4 * kPi * t), r * std::sin(4 * kPi * t)};
    case 1:
      return {r * std::cos(kPi * t), r * std::cos(2 * kPi * t), r * std::cos(3 * kPi * t)};
    default:
      return {r * std::sin(kPi * t), r * std::sin(2 * kPi * t), r * std::sin(3 * kPi * t)};
  }
}

// Coefficient matrix D_{kk'} with C_{kk'}(s, t) = Phi_k(s)^T D_{kk'} Phi_k'(t).
Eigen::Matrix3d cross_coeffs(int k, int k2, double rho) {
  if (k == k2) return sim_lambda(k).asDiagonal();
  return (rho * sim_lambda(k).cwiseSqrt().cwiseProduct(sim_lambda(k2).cwiseSqrt())).asDiagonal();
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n < 1) throw InvalidArgument("scenario needs at least one subject");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("noise variance must be nonnegative");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in [0, 1]");
  if (m_min < 1 || m_max < m_min) throw InvalidArgument("invalid observation count range");
}

ScenarioConfig scenario(int index) {
  static constexpr struct {
    std::size_t n;
    double sigma2;
    double rho;
  } presets[] = {{25, 0.1, 0.5}, {100, 0.25, 0.5}, {500, 0.5, 0.5},
                 {25, 0.1, 0.9}, {100, 0.25, 0.9}, {500, 0.5, 0.9}};
  if (index < 1 || index > 6) throw InvalidArgument("unknown scenario " + std::to_string(index));
  ScenarioConfig c;
  c.n = presets[index - 1].n;
  c.sigma2 = presets[index - 1].sigma2;
  c.rho = presets[index - 1].rho;
  return c;
}

std::vector<std::string> sim_variable_names() { return {"X1", "X2", "X3"}; }

Eigen::MatrixXd sim_basis(int k, const Eigen::Ref<const Eigen::VectorXd>& t) {
  check_variable(k);
  Eigen::MatrixXd out(t.size(), 3);
  for (Eigen::Index i = 0; i < t.size(); ++i) out.row(i) = basis_row(k, t[i]).transpose();
  return out;
}

Eigen::Vector3d sim_lambda(int k) {
  check_variable(k);
  switch (k) {
    case 0: return {3.0, 1.5, 0.75};
    case 1: return {3.5, 1.75, 0.5};
    default: return {2.5, 2.0, 1.0};
  }
}

double sim_mean(int k, double t) {
  check_variable(k);
  switch (k) {
    case 0: return 5.0 * std::sin(2 * kPi * t);
    case 1: return 5.0 * std::cos(2 * kPi * t);
    default: return 5.0 * (t - 1.0) * (t - 1.0);
  }
}

double true_covariance(int k, int k2, double s, double t, double rho) {
  check_variable(k);
  check_variable(k2);
  check_time(s);
  check_time(t);
  return basis_row(k, s).dot(cross_coeffs(k, k2, rho) * basis_row(k2, t));
}

TrueEigen true_mv_eigen(double rho, std::size_t grid_size) {
  if (grid_size < 50) throw InvalidArgument("true eigen-solve needs at least 50 grid points");
  const QuadratureGrid grid = build_grid({0.0, 1.0}, grid_size);
  const Eigen::Index h = grid.size();
  const Eigen::VectorXd sqw = grid.weights().cwiseSqrt();

  // C = F D F^T with F block-diagonal (3H x 9), so W^{1/2} C W^{1/2}
  // is assembled from the per-variable basis values directly.
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(3 * h, 9);
  Eigen::MatrixXd d(9, 9);
  for (int k = 0; k < 3; ++k) {
    f.block(k * h, 3 * k, h, 3) = sim_basis(k, grid.points());
    for (int k2 = 0; k2 < 3; ++k2) d.block(3 * k, 3 * k2, 3, 3) = cross_coeffs(k, k2, rho);
  }
  Eigen::VectorXd sw(3 * h);
  for (int k = 0; k < 3; ++k) sw.segment(k * h, h) = sqw;
  const Eigen::MatrixXd fw = sw.asDiagonal() * f;
  const Eigen::MatrixXd a = fw * d * fw.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  const Eigen::VectorXd all = es.eigenvalues().reverse();
  const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();

  TrueEigen out;
  out.grid = grid.points();
  out.values = all.head(9);
  out.trailing = all.tail(all.size() - 9);
  out.grid_values = sw.cwiseInverse().asDiagonal() * vecs.leftCols(9);
  for (int l = 0; l < 9; ++l) {
    Eigen::Index arg = 0;
    out.grid_values.col(l).cwiseAbs().maxCoeff(&arg);
    if (out.grid_values(arg, l) < 0.0) out.grid_values.col(l) *= -1.0;
  }

  // Nystrom extension: psi_l(t) = (1/d_l) sum_j C(t, tau_j) w_j psi_l(tau_j),
  // which is linear in the marginal basis values at t.
  Eigen::VectorXd w(3 * h);
  for (int k = 0; k < 3; ++k) w.segment(k * h, h) = grid.weights();
  const Eigen::MatrixXd proj = d * f.transpose() * w.asDiagonal() * out.grid_values;  // 9 x 9
  for (int k = 0; k < 3; ++k) {
    Eigen::MatrixXd c = proj.middleRows(3 * k, 3);
    for (int l = 0; l < 9; ++l) c.col(l) /= out.values[l];
    out.coeffs.push_back(c);
  }
  return out;
}

Eigen::VectorXd TruthBundle::mean(int k, const Eigen::Ref<const Eigen::VectorXd>& t) const {
  Eigen::VectorXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = sim_mean(k, t[i]);
  return out;
}

Eigen::MatrixXd TruthBundle::eigenfunctions(int k, const Eigen::Ref<const Eigen::VectorXd>& t) const {
  return sim_basis(k, t) * coeffs.at(static_cast<std::size_t>(k));
}

Eigen::MatrixXd TruthBundle::covariance(int k, int k2, const Eigen::Ref<const Eigen::VectorXd>& s,
                                        const Eigen::Ref<const Eigen::VectorXd>& t) const {
  return sim_basis(k, s) * cross_coeffs(k, k2, config.rho) * sim_basis(k2, t).transpose();
}

Eigen::MatrixXd TruthBundle::centered_curves(int k, const Eigen::Ref<const Eigen::VectorXd>& t) const {
  return scores * eigenfunctions(k, t).transpose();
}

SimulatedData generate(const ScenarioConfig& config) {
  config.validate();
  const TrueEigen eig = true_mv_eigen(config.rho);

  SimulatedData out;
  TruthBundle& truth = out.truth;
  truth.config = config;
  truth.eigenvalues = eig.values;
  truth.coeffs = eig.coeffs;
  truth.scores.resize(static_cast<Eigen::Index>(config.n), kSimComponents);

  SparseDataset& data = out.data;
  for (const auto& name : sim_variable_names()) data.variables.push_back({name, {0.0, 1.0}});

  const int width = static_cast<int>(std::to_string(config.n).size());
  for (std::size_t i = 0; i < config.n; ++i) {
    const auto subject = static_cast<std::uint32_t>(i);
    char id[32];
    std::snprintf(id, sizeof id, "s%0*zu", width, i + 1);
    truth.subject_ids.emplace_back(id);

    PhiloxStream score_stream(config.seed, config.replicate, subject, kScoreChannel);
    const auto row = static_cast<Eigen::Index>(i);
    for (int l = 0; l < kSimComponents; ++l)
      truth.scores(row, l) = std::sqrt(eig.values[l]) * score_stream.normal();

    SubjectRecord rec;
    rec.id = id;
    for (int k = 0; k < kSimVariables; ++k) {
      PhiloxStream s(config.seed, config.replicate, subject, kVariableChannel + static_cast<std::uint32_t>(k));
      const auto m = static_cast<Eigen::Index>(s.uniform_int(config.m_min, config.m_max));
      Eigen::VectorXd t(m);
      for (Eigen::Index j = 0; j < m; ++j) t[j] = s.uniform();
      std::sort(t.data(), t.data() + m);
      const Eigen::VectorXd x = truth.mean(k, t) + truth.eigenfunctions(k, t) * truth.scores.row(row).transpose();
      std::vector<Observation> series;
      series.reserve(static_cast<std::size_t>(m));
      const double sd = std::sqrt(config.sigma2);
      for (Eigen::Index j = 0; j < m; ++j) series.push_back({t[j], x[j] + sd * s.normal()});
      rec.series.push_back(std::move(series));
    }
    data.subjects.push_back(std::move(rec));
  }
  return out;
}

}  // namespace smfpca
