#pragma once

#include "smfpca/csv_io.hpp"
#include "smfpca/pipeline.hpp"

#include <map>
#include <string>

namespace smfpca {

/// Fitting and ingestion settings read from a JSON file. Every key is
/// optional:
///
///   basis_kind        "bspline" | "fourier"          (bspline)
///   basis_order       B-spline order                 (4)
///   basis_counts      [U, ...]                       ([5..10])
///   ranks             [M, ...]                       ([2, 3, 4])
///   grid_size         quadrature points per variable (101)
///   mean_basis_count  mean smoother size             (largest U)
///   weights           {"var": w}                     (all 1)
///   truncation        fixed multivariate M           (elbow rule)
///   seed, restarts    optimizer restarts and their seed (0, 3)
///   optimizer         {grad_tol, f_tol, max_iterations}
///   domains           {"var": [lo, hi]}              (observed range)
///   transforms        {"var": "sqrt" | "log2" | "none"}
///   min_visits        minimum distinct visit times   (0)
struct AnalysisConfig {
  PipelineOptions pipeline;  ///< weights stay empty; see resolve_weights
  IngestOptions ingest;
  std::map<std::string, double> weights;
};

/// Throws InvalidArgument on unknown keys or bad values.
AnalysisConfig parse_config(const std::string& json_text);
/// Throws DataError when the file cannot be read or parsed.
AnalysisConfig load_config(const std::string& path);
/// Canonical JSON text of a configuration (all keys, defaults filled in).
std::string config_json(const AnalysisConfig& config);

/// Weights in dataset variable order; names absent from the dataset are an error.
std::vector<double> resolve_weights(const AnalysisConfig& config, const SparseDataset& data);

}  // namespace smfpca
