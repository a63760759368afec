#include "smfpca/pipeline.hpp"

#include "smfpca/errors.hpp"
#include "smfpca/mean_smooth.hpp"
#include "smfpca/rng.hpp"
#include "smfpca/scoring.hpp"

#include <algorithm>

namespace smfpca {

namespace {

BasisSystem mean_basis(const SparseDataset& data, std::size_t k, const PipelineOptions& options) {
  const auto& counts = options.selection.basis_counts;
  if (counts.empty() && !options.mean_basis_count) throw InvalidArgument("no basis size for the mean smoother");
  const int u = options.mean_basis_count.value_or(counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end()));
  const Interval domain = data.variables.at(k).domain;
  return eval_basis({options.selection.kind, u, options.selection.order, domain}, build_grid(domain, options.grid_size));
}

}  // namespace

MeanModel fit_variable_mean(const SparseDataset& data, std::size_t k, const PipelineOptions& options) {
  const BasisSystem basis = mean_basis(data, k, options);
  if (options.known_means.empty()) return fit_mean(extract_variable(data, k), basis);

  // Represent a known mean in the basis by smoothing dense noiseless samples.
  const auto& f = options.known_means.at(k);
  const Eigen::VectorXd t = linspace(basis.domain(), 1001);
  Eigen::VectorXd y(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) y[i] = f(t[i]);
  return fit_mean(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())),
                  std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), basis);
}

PipelineResult fit_pipeline(const SparseDataset& data, const PipelineOptions& options) {
  data.validate();
  const std::size_t p = data.num_variables();
  if (p == 0) throw InvalidArgument("dataset has no variables");
  if (data.num_subjects() < 2) throw InsufficientData("at least two subjects are required");
  if (!options.known_means.empty() && options.known_means.size() != p)
    throw InvalidArgument("known means must be given for every variable");
  if (!options.weights.empty() && options.weights.size() != p)
    throw InvalidArgument("one weight per variable is required");

  std::vector<MeanModel> means;
  for (std::size_t k = 0; k < p; ++k) means.push_back(fit_variable_mean(data, k, options));

  SparseDataset centered = data;
  if (options.known_means.empty()) {
    centered = center(data, means);
  } else {
    for (auto& subject : centered.subjects)
      for (std::size_t k = 0; k < p; ++k)
        for (auto& obs : subject.series[k]) obs.y -= options.known_means[k](obs.t);
  }

  std::vector<std::string> ids;
  for (const auto& s : data.subjects) ids.push_back(s.id);

  PipelineResult result;
  std::vector<std::string> names;
  std::vector<UnivariateModel> models;
  std::vector<ScoreMatrix> scores;
  for (std::size_t k = 0; k < p; ++k) {
    const UnivariateSample sample = extract_variable(centered, k);
    SelectionOptions sel = options.selection;
    sel.fit.seed = derive_seed(options.selection.fit.seed, 0x7A41u, k);
    SelectionResult chosen = select_model(sample, build_grid(data.variables[k].domain, options.grid_size), sel);
    chosen.model.mean = means[k];
    scores.push_back(conditional_scores(chosen.model, sample, ids, data.variables[k].name));
    names.push_back(data.variables[k].name);
    models.push_back(std::move(chosen.model));
    result.candidates.push_back(std::move(chosen.candidates));
  }

  Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < options.weights.size(); ++k) w[static_cast<Eigen::Index>(k)] = options.weights[k];
  result.model = combine(std::move(names), std::move(models), std::move(scores), w, options.truncation);
  return result;
}

}  // namespace smfpca
