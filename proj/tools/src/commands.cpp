#include "commands.hpp"

#include "smfpca/archive.hpp"
#include "smfpca/benchmark.hpp"
#include "smfpca/config.hpp"
#include "smfpca/csv_io.hpp"
#include "smfpca/errors.hpp"
#include "smfpca/pipeline.hpp"
#include "smfpca/simgen.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace smfpca::cli {

namespace {

namespace fs = std::filesystem;

struct SimulateArgs {
  std::optional<int> scenario;
  std::optional<std::size_t> n;
  std::optional<double> sigma2;
  std::optional<double> rho;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  std::string out;
};

struct FitArgs {
  std::string data;
  std::string config;
  std::string out;
  std::vector<std::string> transforms;
  std::optional<std::size_t> min_visits;
};

struct ModelArgs {
  std::string model;
  std::size_t points = 100;
  std::string out;
  std::string subjects = "all";
};

struct BenchArgs {
  int scenario = 2;
  std::size_t replicates = 20;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 0;
  bool truth_mean = false;
  std::string config;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FileAccessError(path.string(), 0, "cannot open file for writing");
  f << text;
  if (!f) throw FileAccessError(path.string(), 0, "write failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw FileAccessError(dir.string(), 0, "cannot create output directory");
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw FileAccessError(path, 0, std::string(what) + " not found");
}

std::string join_args(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

std::string numbered(const char* stem, std::size_t r, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, r, ext);
  return buf;
}

std::vector<Eigen::VectorXd> evaluation_points(const MultivariateModel& m, std::size_t count) {
  if (count < 2) throw InvalidArgument("--points must be at least 2");
  std::vector<Eigen::VectorXd> pts;
  for (const auto& u : m.univariate) pts.push_back(linspace(u.basis.domain(), count));
  return pts;
}

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  ScenarioConfig cfg;
  if (a.scenario) {
    cfg = scenario(*a.scenario);
  } else {
    if (!a.n || !a.sigma2 || !a.rho) throw InvalidArgument("give --scenario or all of --n, --sigma2 and --rho");
    cfg.n = *a.n;
    cfg.sigma2 = *a.sigma2;
    cfg.rho = *a.rho;
  }
  cfg.seed = a.seed;
  if (a.replicates < 1) throw InvalidArgument("--replicates must be at least 1");
  cfg.validate();

  const fs::path dir(a.out);
  ensure_dir(dir);
  AnalysisConfig fit_cfg;
  for (const auto& name : sim_variable_names()) fit_cfg.ingest.domains[name] = {0.0, 1.0};
  fit_cfg.pipeline.selection.fit.seed = a.seed;
  write_text(dir / "config.json", config_json(fit_cfg) + "\n");

  for (std::size_t r = 0; r < a.replicates; ++r) {
    cfg.replicate = static_cast<std::uint32_t>(r);
    const SimulatedData sim = generate(cfg);
    std::ostringstream csv;
    write_csv(sim.data, csv);
    write_text(dir / numbered("replicate", r, ".csv"), csv.str());
    write_text(dir / numbered("replicate", r, "_truth.json"), truth_json(sim.truth));
  }
  out << "wrote " << a.replicates << " replicate(s) of n=" << cfg.n << " sigma2=" << cfg.sigma2 << " rho=" << cfg.rho
      << " to " << dir.string() << "\n";
  return kOk;
}

// ---- fit --------------------------------------------------------------------

int cmd_fit(const FitArgs& a, const std::string& invocation, std::ostream& out) {
  require_file(a.data, "data file");
  AnalysisConfig cfg;
  if (!a.config.empty()) {
    require_file(a.config, "config file");
    cfg = load_config(a.config);
  }
  for (const auto& spec : a.transforms) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--transform expects VAR=sqrt|log2|none");
    cfg.ingest.transforms[spec.substr(0, eq)] = transform_from_string(spec.substr(eq + 1));
  }
  if (a.min_visits) cfg.ingest.min_visits = *a.min_visits;

  const SparseDataset data = read_csv(a.data, cfg.ingest);
  PipelineOptions popts = cfg.pipeline;
  popts.weights = resolve_weights(cfg, data);
  PipelineResult res = fit_pipeline(data, popts);

  ModelArchive archive;
  archive.model = std::move(res.model);
  archive.provenance = {cfg.pipeline.selection.fit.seed, invocation, utc_timestamp(), config_json(cfg)};
  save_archive(archive, a.out);

  const MultivariateModel& m = archive.model;
  out << "subjects " << m.subject_ids.size() << "\n";
  for (std::size_t k = 0; k < m.num_variables(); ++k) {
    const auto& u = m.univariate[k];
    out << "variable " << m.variable_names[k] << ": U=" << u.basis_count() << " M=" << u.rank()
        << " sigma2=" << u.noise_variance << "\n";
  }
  out << "multivariate components M=" << m.truncation << " of " << m.total_rank() << "\n";
  for (const auto& w : m.warnings) out << "warning: " << w << "\n";
  return kOk;
}

// ---- eval-grid --------------------------------------------------------------

int cmd_eval_grid(const ModelArgs& a, std::ostream& out) {
  require_file(a.model, "model archive");
  const MultivariateModel m = load_archive(a.model).model;
  const auto pts = evaluation_points(m, a.points);
  const fs::path dir(a.out);
  ensure_dir(dir);

  std::ostringstream mean, uni, multi, cov;
  mean << "variable,t,value\n";
  uni << "variable,component,t,value\n";
  multi << "component,variable,t,value\n";
  cov << "variable_s,variable_t,s,t,value\n";
  for (std::size_t k = 0; k < m.num_variables(); ++k) {
    const auto& name = m.variable_names[k];
    const Eigen::VectorXd mu = m.univariate[k].mean.evaluate(pts[k]);
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      mean << name << ',' << format_double(pts[k][i]) << ',' << format_double(mu[i]) << '\n';
    const Eigen::MatrixXd phi = m.univariate[k].eigenfunctions_at(pts[k]);
    for (Eigen::Index q = 0; q < phi.cols(); ++q)
      for (Eigen::Index i = 0; i < phi.rows(); ++i)
        uni << name << ',' << q + 1 << ',' << format_double(pts[k][i]) << ',' << format_double(phi(i, q)) << '\n';
  }
  const auto psi = mv_eigenfunctions(m, pts);
  for (int l = 0; l < m.truncation; ++l)
    for (std::size_t k = 0; k < m.num_variables(); ++k)
      for (Eigen::Index i = 0; i < pts[k].size(); ++i)
        multi << l + 1 << ',' << m.variable_names[k] << ',' << format_double(pts[k][i]) << ','
              << format_double(psi[k](i, l)) << '\n';
  for (std::size_t k = 0; k < m.num_variables(); ++k) {
    for (std::size_t k2 = 0; k2 < m.num_variables(); ++k2) {
      const Eigen::MatrixXd c = reconstruct_covariance(m, k, pts[k], k2, pts[k2]);
      for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j)
          cov << m.variable_names[k] << ',' << m.variable_names[k2] << ',' << format_double(pts[k][i]) << ','
              << format_double(pts[k2][j]) << ',' << format_double(c(i, j)) << '\n';
    }
  }
  write_text(dir / "mean.csv", mean.str());
  write_text(dir / "univariate_eigenfunctions.csv", uni.str());
  write_text(dir / "mv_eigenfunctions.csv", multi.str());
  write_text(dir / "covariance.csv", cov.str());
  out << "wrote grid evaluations on " << a.points << " points to " << dir.string() << "\n";
  return kOk;
}

// ---- scores -----------------------------------------------------------------

int cmd_scores(const ModelArgs& a, std::ostream& out) {
  require_file(a.model, "model archive");
  const MultivariateModel m = load_archive(a.model).model;
  std::ostringstream csv;
  csv << "subject_id";
  for (std::size_t k = 0; k < m.num_variables(); ++k)
    for (int q = 0; q < m.univariate[k].rank(); ++q) csv << ',' << m.variable_names[k] << "_xi" << q + 1;
  for (int l = 0; l < m.truncation; ++l) csv << ",rho" << l + 1;
  csv << '\n';
  for (std::size_t i = 0; i < m.subject_ids.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    csv << m.subject_ids[i];
    for (const auto& s : m.univariate_scores)
      for (Eigen::Index q = 0; q < s.values.cols(); ++q) csv << ',' << format_double(s.values(row, q));
    for (Eigen::Index l = 0; l < m.scores.cols(); ++l) csv << ',' << format_double(m.scores(row, l));
    csv << '\n';
  }
  write_text(a.out, csv.str());
  out << "wrote scores for " << m.subject_ids.size() << " subjects to " << a.out << "\n";
  return kOk;
}

// ---- reconstruct ------------------------------------------------------------

int cmd_reconstruct(const ModelArgs& a, std::ostream& out) {
  require_file(a.model, "model archive");
  const MultivariateModel m = load_archive(a.model).model;
  std::vector<std::size_t> rows;
  if (a.subjects == "all") {
    for (std::size_t i = 0; i < m.subject_ids.size(); ++i) rows.push_back(i);
  } else {
    std::stringstream ss(a.subjects);
    std::string id;
    while (std::getline(ss, id, ',')) {
      if (id.empty()) continue;
      const auto it = std::find(m.subject_ids.begin(), m.subject_ids.end(), id);
      if (it == m.subject_ids.end()) throw InvalidArgument("unknown subject '" + id + "'");
      rows.push_back(static_cast<std::size_t>(it - m.subject_ids.begin()));
    }
    if (rows.empty()) throw InvalidArgument("--subjects lists no subject");
  }
  const auto pts = evaluation_points(m, a.points);
  const auto curves = reconstruct_curves(m, pts);
  std::ostringstream csv;
  csv << "subject_id,variable,t,value\n";
  for (std::size_t i : rows)
    for (std::size_t k = 0; k < m.num_variables(); ++k)
      for (Eigen::Index j = 0; j < pts[k].size(); ++j)
        csv << m.subject_ids[i] << ',' << m.variable_names[k] << ',' << format_double(pts[k][j]) << ','
            << format_double(curves[k](static_cast<Eigen::Index>(i), j)) << '\n';
  write_text(a.out, csv.str());
  out << "wrote trajectories for " << rows.size() << " subject(s) to " << a.out << "\n";
  return kOk;
}

// ---- benchmark --------------------------------------------------------------

int cmd_benchmark(const BenchArgs& a, std::ostream& out) {
  ScenarioConfig cfg = scenario(a.scenario);
  cfg.seed = a.seed;
  BenchmarkOptions opts;
  if (!a.config.empty()) {
    require_file(a.config, "config file");
    opts.pipeline = load_config(a.config).pipeline;
  }
  opts.pipeline.selection.fit.seed = a.seed;
  opts.threads = a.threads;
  opts.truth_mean = a.truth_mean;

  const fs::path dir(a.out);
  ensure_dir(dir);
  const BenchmarkReport report = run_benchmark(cfg, a.replicates, opts);
  write_text(dir / "report.json", report_json(report));
  write_text(dir / "replicates.csv", report_csv(report));

  out << "scenario " << a.scenario << ": " << report.records.size() << " of " << report.replicates
      << " replicates succeeded\n";
  for (const auto& [name, s] : report.aggregates)
    out << "  " << name << " median " << s.median << " iqr " << s.iqr << "\n";
  return kOk;
}

// ---- error reporting --------------------------------------------------------

int report_error(const Error& e, std::ostream& err) {
  if (dynamic_cast<const EmptyInput*>(&e) || dynamic_cast<const FileAccessError*>(&e) ||
      dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const MissingModel*>(&e)) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const InsufficientData*>(&e) || dynamic_cast<const AlignmentError*>(&e)) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  nlohmann::ordered_json j = {{"error", e.kind()}, {"message", e.what()}};
  const std::vector<FailureRecord>* failures = nullptr;
  if (const auto* s = dynamic_cast<const SelectionFailed*>(&e)) failures = &s->failures();
  if (const auto* b = dynamic_cast<const BenchmarkFailed*>(&e)) failures = &b->failures();
  if (failures) {
    j["failures"] = nlohmann::ordered_json::array();
    for (const auto& f : *failures) j["failures"].push_back({{"label", f.label}, {"kind", f.kind}, {"message", f.message}});
  }
  err << j.dump() << "\n";
  return kNumerical;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse multivariate functional principal component analysis"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate synthetic trivariate datasets");
  auto* s_scen = s->add_option("--scenario", sim.scenario, "Preset scenario 1..6");
  auto* s_n = s->add_option("--n", sim.n, "Number of subjects");
  auto* s_sig = s->add_option("--sigma2", sim.sigma2, "Noise variance");
  auto* s_rho = s->add_option("--rho", sim.rho, "Cross-correlation in [0, 1]");
  s_scen->excludes(s_n)->excludes(s_sig)->excludes(s_rho);
  s->add_option("--replicates", sim.replicates, "Number of datasets")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--out", sim.out, "Output directory")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a model to long-format CSV data");
  f->add_option("--data", fit.data, "CSV with columns subject_id,variable,t,y")->required();
  f->add_option("--config", fit.config, "JSON configuration");
  f->add_option("--out", fit.out, "Model archive to write")->required();
  f->add_option("--transform", fit.transforms, "VAR=sqrt|log2|none, repeatable");
  f->add_option("--min-visits", fit.min_visits, "Keep subjects with at least this many visit times");

  ModelArgs grid;
  auto* g = app.add_subcommand("eval-grid", "Evaluate fitted functions on an even grid");
  g->add_option("--model", grid.model, "Model archive")->required();
  g->add_option("--points", grid.points, "Points per variable")->capture_default_str();
  g->add_option("--out", grid.out, "Output directory")->required();

  ModelArgs sc;
  auto* c = app.add_subcommand("scores", "Write univariate and multivariate scores");
  c->add_option("--model", sc.model, "Model archive")->required();
  c->add_option("--out", sc.out, "CSV file to write")->required();

  ModelArgs rc;
  auto* r = app.add_subcommand("reconstruct", "Write fitted trajectories");
  r->add_option("--model", rc.model, "Model archive")->required();
  r->add_option("--subjects", rc.subjects, "Comma-separated subject ids or 'all'")->capture_default_str();
  r->add_option("--points", rc.points, "Points per variable")->capture_default_str();
  r->add_option("--out", rc.out, "CSV file to write")->required();

  BenchArgs bench;
  auto* b = app.add_subcommand("benchmark", "Run a simulation benchmark");
  b->add_option("--scenario", bench.scenario, "Preset scenario 1..6")->capture_default_str();
  b->add_option("--replicates", bench.replicates, "Number of replicates")->capture_default_str();
  b->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  b->add_option("--out", bench.out, "Output directory")->required();
  b->add_option("--threads", bench.threads, "Worker threads (0: all cores)")->capture_default_str();
  b->add_flag("--truth-mean", bench.truth_mean, "Center by the generating means");
  b->add_option("--config", bench.config, "JSON fitting configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const std::string invocation = join_args(argc, argv);
  try {
    if (*s) return cmd_simulate(sim, out);
    if (*f) return cmd_fit(fit, invocation, out);
    if (*g) return cmd_eval_grid(grid, out);
    if (*c) return cmd_scores(sc, out);
    if (*r) return cmd_reconstruct(rc, out);
    if (*b) return cmd_benchmark(bench, out);
  } catch (const Error& e) {
    return report_error(e, err);
  } catch (const std::exception& e) {
    err << nlohmann::ordered_json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return kNumerical;
  }
  return kUsage;
}

}  // namespace smfpca::cli
