#include "smfpca/benchmark.hpp"

#include "smfpca/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <sstream>
#include <thread>
#include <variant>

namespace smfpca {

namespace {

std::vector<double> column(const std::vector<ReplicateRecord>& records, auto get) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::optional<double> v = get(r);
    if (v) out.push_back(*v);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ReplicateRecord evaluate_replicate(const SimulatedData& sim, const BenchmarkOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  PipelineOptions popts = options.pipeline;
  popts.selection.fit.seed = derive_seed(options.pipeline.selection.fit.seed, sim.truth.config.replicate);
  if (options.truth_mean) {
    popts.known_means.clear();
    for (int k = 0; k < kSimVariables; ++k) popts.known_means.push_back([k](double t) { return sim_mean(k, t); });
  }
  const MultivariateModel model = fit_pipeline(sim.data, popts).model;
  const TruthBundle& truth = sim.truth;

  const Eigen::VectorXd g = linspace({0.0, 1.0}, options.metric_points);
  const auto h = g.size();
  const std::vector<Eigen::VectorXd> pts(kSimVariables, g);

  Eigen::MatrixXd cov_true(kSimVariables * h, kSimVariables * h);
  for (int k = 0; k < kSimVariables; ++k)
    for (int k2 = 0; k2 < kSimVariables; ++k2) cov_true.block(k * h, k2 * h, h, h) = truth.covariance(k, k2, g, g);
  auto cov_hat = [&](int count) {
    Eigen::MatrixXd c(kSimVariables * h, kSimVariables * h);
    for (int k = 0; k < kSimVariables; ++k)
      for (int k2 = 0; k2 < kSimVariables; ++k2)
        c.block(k * h, k2 * h, h, h) =
            reconstruct_covariance(model, static_cast<std::size_t>(k), g, static_cast<std::size_t>(k2), g, count);
    return c;
  };

  ReplicateRecord rec;
  rec.replicate = truth.config.replicate;
  rec.rmse_cov = rmse_cov(cov_hat(model.truncation), cov_true);
  rec.rmse_cov_all = rmse_cov(cov_hat(model.total_rank()), cov_true);

  const int l_count = std::min(options.components, model.total_rank());
  const std::vector<Eigen::MatrixXd> psi_hat = mv_eigenfunctions(model, pts, l_count);
  for (int l = 0; l < l_count; ++l) {
    Eigen::VectorXd est(kSimVariables * h), tru(kSimVariables * h);
    for (int k = 0; k < kSimVariables; ++k) {
      est.segment(k * h, h) = psi_hat[static_cast<std::size_t>(k)].col(l);
      tru.segment(k * h, h) = truth.eigenfunctions(k, g).col(l);
    }
    rec.rmse_psi.push_back(rmse_eigenfunction(est, tru));
    rec.rse_eta.push_back(rse_eigenvalue(model.spectrum[l], truth.eigenvalues[l]));
  }

  const auto n = static_cast<Eigen::Index>(sim.data.num_subjects());
  Eigen::MatrixXd x_true(n, kSimVariables * h);
  for (int k = 0; k < kSimVariables; ++k) x_true.middleCols(k * h, h) = truth.centered_curves(k, g);
  auto x_hat = [&](int count) {
    const Eigen::MatrixXd rho = mv_scores(model, model.univariate_scores, count);
    const std::vector<Eigen::MatrixXd> psi = mv_eigenfunctions(model, pts, count);
    Eigen::MatrixXd x(n, kSimVariables * h);
    for (int k = 0; k < kSimVariables; ++k) x.middleCols(k * h, h) = rho * psi[static_cast<std::size_t>(k)].transpose();
    return x;
  };
  rec.rmse_recon = rmse_reconstruction(x_hat(model.truncation), x_true);
  rec.rmse_recon_all = rmse_reconstruction(x_hat(model.total_rank()), x_true);

  for (const auto& u : model.univariate) {
    const Eigen::MatrixXd& phi = u.eigenfunctions.values;
    const Eigen::MatrixXd gram = phi.transpose() * u.grid().weights().asDiagonal() * phi;
    rec.orthonormality_uni = std::max(
        rec.orthonormality_uni, (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff());
  }
  const Eigen::MatrixXd mv = mv_gram(model, model.total_rank());
  rec.orthonormality_mv = (mv - Eigen::MatrixXd::Identity(mv.rows(), mv.cols())).cwiseAbs().maxCoeff();

  for (const auto& u : model.univariate) {
    rec.basis_counts.push_back(u.basis_count());
    rec.ranks.push_back(u.rank());
  }
  rec.truncation = model.truncation;
  rec.warnings = model.warnings;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::map<std::string, Summary> aggregate(const std::vector<ReplicateRecord>& records) {
  std::map<std::string, Summary> out;
  out["rmse_cov"] = summarize(column(records, [](const ReplicateRecord& r) { return std::optional(r.rmse_cov); }));
  out["rmse_recon"] = summarize(column(records, [](const ReplicateRecord& r) { return std::optional(r.rmse_recon); }));
  out["rmse_cov_all"] =
      summarize(column(records, [](const ReplicateRecord& r) { return std::optional(r.rmse_cov_all); }));
  out["rmse_recon_all"] =
      summarize(column(records, [](const ReplicateRecord& r) { return std::optional(r.rmse_recon_all); }));
  std::size_t comps = 0;
  for (const auto& r : records) comps = std::max(comps, r.rmse_psi.size());
  for (std::size_t l = 0; l < comps; ++l) {
    const std::string suffix = std::to_string(l + 1);
    out["rmse_psi" + suffix] = summarize(column(records, [l](const ReplicateRecord& r) {
      return l < r.rmse_psi.size() ? std::optional(r.rmse_psi[l]) : std::nullopt;
    }));
    out["rse_eta" + suffix] = summarize(column(records, [l](const ReplicateRecord& r) {
      return l < r.rse_eta.size() ? std::optional(r.rse_eta[l]) : std::nullopt;
    }));
  }
  return out;
}

BenchmarkReport run_benchmark(const ScenarioConfig& scenario, std::size_t replicates, const BenchmarkOptions& options) {
  if (replicates < 1) throw InvalidArgument("at least one replicate is required");
  scenario.validate();

  using Outcome = std::variant<ReplicateRecord, FailureRecord>;
  std::vector<Outcome> outcomes(replicates);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < replicates; r = next++) {
      ScenarioConfig cfg = scenario;
      cfg.replicate = static_cast<std::uint32_t>(r);
      try {
        outcomes[r] = evaluate_replicate(generate(cfg), options);
      } catch (const Error& e) {
        outcomes[r] = FailureRecord{"replicate " + std::to_string(r), e.kind(), e.what()};
      } catch (const std::exception& e) {
        outcomes[r] = FailureRecord{"replicate " + std::to_string(r), "internal", e.what()};
      }
    }
  };

  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, replicates);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  BenchmarkReport report;
  report.scenario = scenario;
  report.scenario.replicate = 0;
  report.replicates = replicates;
  report.truth_mean = options.truth_mean;
  for (auto& o : outcomes) {
    if (auto* rec = std::get_if<ReplicateRecord>(&o)) report.records.push_back(std::move(*rec));
    else report.failures.push_back(std::get<FailureRecord>(o));
  }
  if (static_cast<double>(report.failures.size()) > options.max_failure_fraction * static_cast<double>(replicates))
    throw BenchmarkFailed(report.failures, replicates);
  report.aggregates = aggregate(report.records);
  return report;
}

std::string report_json(const BenchmarkReport& report, bool timings) {
  using nlohmann::ordered_json;
  ordered_json j;
  const ScenarioConfig& s = report.scenario;
  j["scenario"] = {{"n", s.n},         {"sigma2", s.sigma2}, {"rho", s.rho},
                   {"m_min", s.m_min}, {"m_max", s.m_max},   {"seed", s.seed}};
  j["replicates"] = report.replicates;
  j["truth_mean"] = report.truth_mean;
  ordered_json records = ordered_json::array();
  for (const auto& r : report.records) {
    ordered_json rec = {{"replicate", r.replicate}, {"rmse_cov", r.rmse_cov},         {"rmse_psi", r.rmse_psi},
                        {"rse_eta", r.rse_eta},     {"rmse_recon", r.rmse_recon},     {"rmse_cov_all", r.rmse_cov_all},
                        {"rmse_recon_all", r.rmse_recon_all}, {"orthonormality_uni", r.orthonormality_uni},
                        {"orthonormality_mv", r.orthonormality_mv}, {"basis_counts", r.basis_counts},
                        {"ranks", r.ranks},         {"truncation", r.truncation},     {"warnings", r.warnings}};
    if (timings) rec["seconds"] = r.seconds;
    records.push_back(std::move(rec));
  }
  j["records"] = std::move(records);
  ordered_json failures = ordered_json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"label", f.label}, {"kind", f.kind}, {"message", f.message}});
  j["failures"] = std::move(failures);
  ordered_json agg = ordered_json::object();
  for (const auto& [name, sm] : report.aggregates)
    agg[name] = {{"median", sm.median}, {"iqr", sm.iqr}, {"q1", sm.q1}, {"q3", sm.q3}, {"count", sm.count}};
  j["aggregates"] = std::move(agg);
  return j.dump(2) + "\n";
}

std::string report_csv(const BenchmarkReport& report, bool timings) {
  std::size_t comps = 0;
  std::size_t p = 0;
  for (const auto& r : report.records) {
    comps = std::max(comps, r.rmse_psi.size());
    p = std::max(p, r.basis_counts.size());
  }
  std::ostringstream os;
  os << "replicate,rmse_cov";
  for (std::size_t l = 0; l < comps; ++l) os << ",rmse_psi" << l + 1;
  for (std::size_t l = 0; l < comps; ++l) os << ",rse_eta" << l + 1;
  os << ",rmse_recon,rmse_cov_all,rmse_recon_all";
  for (std::size_t k = 0; k < p; ++k) os << ",U" << k + 1 << ",M" << k + 1;
  os << ",M";
  if (timings) os << ",seconds";
  os << '\n';
  for (const auto& r : report.records) {
    os << r.replicate << ',' << fmt(r.rmse_cov);
    for (std::size_t l = 0; l < comps; ++l) os << ',' << (l < r.rmse_psi.size() ? fmt(r.rmse_psi[l]) : "");
    for (std::size_t l = 0; l < comps; ++l) os << ',' << (l < r.rse_eta.size() ? fmt(r.rse_eta[l]) : "");
    os << ',' << fmt(r.rmse_recon) << ',' << fmt(r.rmse_cov_all) << ',' << fmt(r.rmse_recon_all);
    for (std::size_t k = 0; k < p; ++k) {
      if (k < r.basis_counts.size()) os << ',' << r.basis_counts[k] << ',' << r.ranks[k];
      else os << ",,";
    }
    os << ',' << r.truncation;
    if (timings) os << ',' << fmt(r.seconds);
    os << '\n';
  }
  return os.str();
}

}  // namespace smfpca
