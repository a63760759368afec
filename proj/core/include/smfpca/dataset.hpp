#pragma once

#include "smfpca/grid_basis.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace smfpca {

struct Observation {
  double t = 0.0;
  double y = 0.0;
};

struct VariableInfo {
  std::string name;
  Interval domain;
};

struct SubjectRecord {
  std::string id;
  /// One series per variable, in the dataset's variable order, sorted by t.
  std::vector<std::vector<Observation>> series;

  std::size_t observation_count() const;
};

/// Irregular per-subject, per-variable observations.
struct SparseDataset {
  std::vector<VariableInfo> variables;
  std::vector<SubjectRecord> subjects;

  std::size_t num_variables() const noexcept { return variables.size(); }
  std::size_t num_subjects() const noexcept { return subjects.size(); }

  /// Index of the named variable; throws InvalidArgument if absent.
  std::size_t variable_index(const std::string& name) const;

  /// Checks domain containment, sortedness, and per-subject shape.
  /// Throws DomainError or InvalidArgument.
  void validate() const;
};

/// One subject's series for a single variable.
struct SubjectSeries {
  Eigen::VectorXd t;
  Eigen::VectorXd y;

  Eigen::Index size() const noexcept { return t.size(); }
};

/// All subjects' series for one variable, aligned with the dataset's
/// subject order (subjects without observations have empty series).
using UnivariateSample = std::vector<SubjectSeries>;

UnivariateSample extract_variable(const SparseDataset& data, std::size_t k);

/// Subjects with at least one observation.
UnivariateSample nonempty(const UnivariateSample& sample);

std::size_t total_observations(const UnivariateSample& sample);

}  // namespace smfpca
