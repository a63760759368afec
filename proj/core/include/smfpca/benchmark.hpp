#pragma once

#include "smfpca/errors.hpp"
#include "smfpca/metrics.hpp"
#include "smfpca/pipeline.hpp"
#include "smfpca/simgen.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smfpca {

struct BenchmarkOptions {
  PipelineOptions pipeline;
  std::size_t threads = 0;          ///< 0 uses the hardware concurrency
  bool truth_mean = false;          ///< center by the generating means instead of estimates
  std::size_t metric_points = 100;  ///< evaluation points per variable
  int components = 2;               ///< leading components scored for eigenfunctions/eigenvalues
  double max_failure_fraction = 0.2;
};

struct ReplicateRecord {
  std::uint32_t replicate = 0;
  double rmse_cov = 0.0;
  std::vector<double> rmse_psi;  ///< per leading component
  std::vector<double> rse_eta;
  double rmse_recon = 0.0;
  /// Covariance and reconstruction errors with every component retained.
  double rmse_cov_all = 0.0;
  double rmse_recon_all = 0.0;
  /// Largest deviation from the identity of the univariate grid Gram
  /// matrices and of the multivariate eigenfunction Gram matrix.
  double orthonormality_uni = 0.0;
  double orthonormality_mv = 0.0;
  std::vector<int> basis_counts;  ///< selected U per variable
  std::vector<int> ranks;         ///< selected M_k per variable
  int truncation = 0;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

struct BenchmarkReport {
  ScenarioConfig scenario;
  std::size_t replicates = 0;
  bool truth_mean = false;
  std::vector<ReplicateRecord> records;  ///< successful replicates, by index
  std::vector<FailureRecord> failures;
  std::map<std::string, Summary> aggregates;
};

/// Fits one simulated dataset and scores it against its truth.
ReplicateRecord evaluate_replicate(const SimulatedData& sim, const BenchmarkOptions& options);

/// Generates and evaluates replicates 0..replicates-1 of `scenario`
/// (the scenario's replicate field is ignored). Replicates run
/// concurrently; the report does not depend on the thread count.
/// Throws BenchmarkFailed when more than the allowed fraction fail.
BenchmarkReport run_benchmark(const ScenarioConfig& scenario, std::size_t replicates,
                              const BenchmarkOptions& options = {});

/// Medians and IQRs recomputed from the records.
std::map<std::string, Summary> aggregate(const std::vector<ReplicateRecord>& records);

/// JSON text; wall times are omitted unless `timings` is set.
std::string report_json(const BenchmarkReport& report, bool timings = true);
/// One row per successful replicate.
std::string report_csv(const BenchmarkReport& report, bool timings = true);

}  // namespace smfpca
