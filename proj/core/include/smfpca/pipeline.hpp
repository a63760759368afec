#pragma once

#include "smfpca/dataset.hpp"
#include "smfpca/mfpca.hpp"
#include "smfpca/ufpca.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace smfpca {

struct PipelineOptions {
  SelectionOptions selection;
  std::size_t grid_size = 101;
  /// Basis size of the mean smoother; defaults to the largest candidate U.
  std::optional<int> mean_basis_count;
  /// Empty means equal weights.
  std::vector<double> weights;
  /// Fixed number of multivariate components; the elbow rule otherwise.
  std::optional<int> truncation;
  /// When set (one per variable), data are centered by these functions
  /// instead of estimated means.
  std::vector<std::function<double(double)>> known_means;
};

struct PipelineResult {
  MultivariateModel model;
  std::vector<std::vector<CandidateSummary>> candidates;  ///< per variable
};

/// Mean estimation, centering, per-variable model selection, scoring and
/// multivariate combination.
PipelineResult fit_pipeline(const SparseDataset& data, const PipelineOptions& options = {});

/// Mean model used for variable k under the given options.
MeanModel fit_variable_mean(const SparseDataset& data, std::size_t k, const PipelineOptions& options);

}  // namespace smfpca
