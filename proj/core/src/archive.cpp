#include "smfpca/archive.hpp"

#include "smfpca/errors.hpp"

#include "json.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace smfpca {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_j(const Eigen::MatrixXd& m) {
  ordered_json data = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

ordered_json to_j(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw InvalidArgument("matrix data length does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = data[k++].get<double>();
  return m;
}

Eigen::VectorXd vector_from(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

ordered_json basis_to_j(const BasisSystem& b) {
  return {{"kind", to_string(b.kind())},
          {"count", b.count()},
          {"order", b.spec().order},
          {"domain", {b.domain().lo, b.domain().hi}},
          {"grid_size", b.grid().size()}};
}

BasisSystem basis_from(const json& j) {
  BasisSpec spec;
  spec.kind = basis_kind_from_string(j.at("kind").get<std::string>());
  spec.count = j.at("count").get<int>();
  spec.order = j.at("order").get<int>();
  spec.domain = {j.at("domain").at(0).get<double>(), j.at("domain").at(1).get<double>()};
  return eval_basis(spec, build_grid(spec.domain, j.at("grid_size").get<std::size_t>()));
}

BfgsStatus status_from(const std::string& s) {
  for (BfgsStatus st : {BfgsStatus::GradientConverged, BfgsStatus::ObjectiveConverged, BfgsStatus::MaxIterations,
                        BfgsStatus::LineSearchFailed})
    if (to_string(st) == s) return st;
  throw InvalidArgument("unknown optimizer status '" + s + "'");
}

ordered_json univariate_to_j(const UnivariateModel& u, const ScoreMatrix& scores) {
  ordered_json j;
  j["basis"] = basis_to_j(u.basis);
  j["mean"] = {{"basis", basis_to_j(u.mean.basis)}, {"coeffs", to_j(u.mean.coeffs)}, {"smoothing", u.mean.smoothing}};
  j["beta"] = to_j(u.params.beta);
  j["eta"] = to_j(u.params.eta);
  j["gamma"] = u.params.gamma;
  j["eigenfunction_values"] = to_j(u.eigenfunctions.values);
  j["beta_tilde"] = to_j(u.eigenfunctions.coeffs_orthobasis);
  j["eigenvalues"] = to_j(u.eigenvalues);
  j["noise_variance"] = u.noise_variance;
  j["nll"] = u.nll;
  j["subject_count"] = u.subject_count;
  j["status"] = to_string(u.status);
  j["iterations"] = u.iterations;
  j["scores"] = to_j(scores.values);
  std::vector<int> under;
  for (bool b : scores.underdetermined) under.push_back(b ? 1 : 0);
  j["underdetermined"] = under;
  return j;
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string archive_json(const ModelArchive& archive) {
  const MultivariateModel& m = archive.model;
  ordered_json j;
  j["format_version"] = kArchiveFormatVersion;
  j["provenance"] = {{"seed", archive.provenance.seed},
                     {"invocation", archive.provenance.invocation},
                     {"timestamp", archive.provenance.timestamp},
                     {"config", archive.provenance.config}};
  j["subject_ids"] = m.subject_ids;
  ordered_json vars = ordered_json::array();
  for (std::size_t k = 0; k < m.num_variables(); ++k) {
    ordered_json v = {{"name", m.variable_names[k]}};
    v.update(univariate_to_j(m.univariate[k], m.univariate_scores[k]));
    vars.push_back(std::move(v));
  }
  j["variables"] = std::move(vars);
  j["multivariate"] = {{"weights", to_j(m.weights)},
                       {"z", to_j(m.z)},
                       {"eigenvalues", to_j(m.spectrum)},
                       {"eigenvectors", to_j(m.eigenvectors_full)},
                       {"truncation", m.truncation},
                       {"scores", to_j(m.scores)},
                       {"warnings", m.warnings}};
  return j.dump(1) + "\n";
}

ModelArchive parse_archive(const std::string& text, const std::string& label) {
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kArchiveFormatVersion)
      throw DataError(label, 0, "unsupported archive format_version " + std::to_string(version));
    ModelArchive a;
    const json& pv = j.at("provenance");
    a.provenance.seed = pv.at("seed").get<std::uint64_t>();
    a.provenance.invocation = pv.at("invocation").get<std::string>();
    a.provenance.timestamp = pv.at("timestamp").get<std::string>();
    a.provenance.config = pv.at("config").get<std::string>();

    MultivariateModel& m = a.model;
    m.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
    for (const json& v : j.at("variables")) {
      UnivariateModel u;
      u.basis = basis_from(v.at("basis"));
      u.mean.basis = basis_from(v.at("mean").at("basis"));
      u.mean.coeffs = vector_from(v.at("mean").at("coeffs"));
      u.mean.smoothing = v.at("mean").at("smoothing").get<double>();
      u.params.beta = matrix_from(v.at("beta"));
      u.params.eta = vector_from(v.at("eta"));
      u.params.gamma = v.at("gamma").get<double>();
      u.eigenfunctions.values = matrix_from(v.at("eigenfunction_values"));
      u.eigenfunctions.coeffs_orthobasis = matrix_from(v.at("beta_tilde"));
      u.eigenvalues = vector_from(v.at("eigenvalues"));
      u.noise_variance = v.at("noise_variance").get<double>();
      u.nll = v.at("nll").get<double>();
      u.subject_count = v.at("subject_count").get<std::size_t>();
      u.status = status_from(v.at("status").get<std::string>());
      u.iterations = v.at("iterations").get<int>();

      ScoreMatrix s;
      s.values = matrix_from(v.at("scores"));
      s.subject_ids = m.subject_ids;
      s.variable = v.at("name").get<std::string>();
      for (int b : v.at("underdetermined").get<std::vector<int>>()) s.underdetermined.push_back(b != 0);
      if (u.eigenfunctions.coeffs_orthobasis.rows() != u.basis.count() ||
          u.eigenfunctions.values.rows() != u.basis.grid().size() || s.values.cols() != u.rank() ||
          s.values.rows() != static_cast<Eigen::Index>(m.subject_ids.size()))
        throw InvalidArgument("inconsistent shapes for variable '" + s.variable + "'");

      m.variable_names.push_back(s.variable);
      m.univariate.push_back(std::move(u));
      m.univariate_scores.push_back(std::move(s));
    }
    const json& mv = j.at("multivariate");
    m.weights = vector_from(mv.at("weights"));
    m.z = matrix_from(mv.at("z"));
    m.spectrum = vector_from(mv.at("eigenvalues"));
    m.eigenvectors_full = matrix_from(mv.at("eigenvectors"));
    m.truncation = mv.at("truncation").get<int>();
    m.scores = matrix_from(mv.at("scores"));
    m.warnings = mv.at("warnings").get<std::vector<std::string>>();
    int total = 0;
    for (const auto& u : m.univariate) total += u.rank();
    if (m.z.rows() != total || m.eigenvectors_full.rows() != total || m.spectrum.size() != total ||
        m.truncation < 1 || m.truncation > total || m.weights.size() != static_cast<Eigen::Index>(m.num_variables()))
      throw InvalidArgument("multivariate block shapes do not match the univariate models");
    return a;
  } catch (const DataError&) {
    throw;
  } catch (const json::exception& e) {
    throw DataError(label, 0, std::string("malformed archive: ") + e.what());
  } catch (const Error& e) {
    throw DataError(label, 0, std::string("malformed archive: ") + e.what());
  }
}

void save_archive(const ModelArchive& archive, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileAccessError(path, 0, "cannot open file for writing");
  out << archive_json(archive);
  if (!out) throw FileAccessError(path, 0, "write failed");
}

ModelArchive load_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileAccessError(path, 0, "cannot open model archive");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_archive(os.str(), path);
}

std::string truth_json(const TruthBundle& truth) {
  ordered_json j;
  const ScenarioConfig& c = truth.config;
  j["config"] = {{"n", c.n},         {"sigma2", c.sigma2}, {"rho", c.rho},
                 {"m_min", c.m_min}, {"m_max", c.m_max},   {"seed", c.seed}, {"replicate", c.replicate}};
  j["eigenvalues"] = to_j(truth.eigenvalues);
  ordered_json coeffs = ordered_json::array();
  for (const auto& m : truth.coeffs) coeffs.push_back(to_j(m));
  j["coeffs"] = std::move(coeffs);
  j["subject_ids"] = truth.subject_ids;
  j["scores"] = to_j(truth.scores);
  return j.dump(1) + "\n";
}

TruthBundle parse_truth(const std::string& text, const std::string& label) {
  try {
    const json j = json::parse(text);
    TruthBundle t;
    const json& c = j.at("config");
    t.config.n = c.at("n").get<std::size_t>();
    t.config.sigma2 = c.at("sigma2").get<double>();
    t.config.rho = c.at("rho").get<double>();
    t.config.m_min = c.at("m_min").get<int>();
    t.config.m_max = c.at("m_max").get<int>();
    t.config.seed = c.at("seed").get<std::uint64_t>();
    t.config.replicate = c.at("replicate").get<std::uint32_t>();
    t.eigenvalues = vector_from(j.at("eigenvalues"));
    for (const json& m : j.at("coeffs")) t.coeffs.push_back(matrix_from(m));
    t.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
    t.scores = matrix_from(j.at("scores"));
    return t;
  } catch (const json::exception& e) {
    throw DataError(label, 0, std::string("malformed truth bundle: ") + e.what());
  } catch (const Error& e) {
    throw DataError(label, 0, std::string("malformed truth bundle: ") + e.what());
  }
}

}  // namespace smfpca
