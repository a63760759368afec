#include "smfpca/dataset.hpp"

#include "smfpca/errors.hpp"

#include <cmath>
#include <sstream>

namespace smfpca {

std::size_t SubjectRecord::observation_count() const {
  std::size_t n = 0;
  for (const auto& s : series) n += s.size();
  return n;
}

std::size_t SparseDataset::variable_index(const std::string& name) const {
  for (std::size_t k = 0; k < variables.size(); ++k)
    if (variables[k].name == name) return k;
  throw InvalidArgument("unknown variable '" + name + "'");
}

void SparseDataset::validate() const {
  for (const auto& subj : subjects) {
    if (subj.series.size() != variables.size())
      throw InvalidArgument("subject '" + subj.id + "' does not carry one series per variable");
    for (std::size_t k = 0; k < variables.size(); ++k) {
      const Interval d = variables[k].domain;
      double prev = -INFINITY;
      for (const auto& obs : subj.series[k]) {
        if (!std::isfinite(obs.t) || !std::isfinite(obs.y))
          throw InvalidArgument("subject '" + subj.id + "' has a non-finite observation");
        if (!d.contains(obs.t)) {
          std::ostringstream os;
          os << "subject '" << subj.id << "', variable '" << variables[k].name << "': time " << obs.t
             << " outside [" << d.lo << ", " << d.hi << "]";
          throw DomainError(os.str());
        }
        if (obs.t < prev) throw InvalidArgument("subject '" + subj.id + "' has unsorted times");
        prev = obs.t;
      }
    }
  }
}

UnivariateSample extract_variable(const SparseDataset& data, std::size_t k) {
  if (k >= data.num_variables()) throw InvalidArgument("variable index out of range");
  UnivariateSample out;
  out.reserve(data.subjects.size());
  for (const auto& subj : data.subjects) {
    const auto& obs = subj.series.at(k);
    SubjectSeries s{Eigen::VectorXd(static_cast<Eigen::Index>(obs.size())),
                    Eigen::VectorXd(static_cast<Eigen::Index>(obs.size()))};
    for (std::size_t j = 0; j < obs.size(); ++j) {
      s.t[static_cast<Eigen::Index>(j)] = obs[j].t;
      s.y[static_cast<Eigen::Index>(j)] = obs[j].y;
    }
    out.push_back(std::move(s));
  }
  return out;
}

UnivariateSample nonempty(const UnivariateSample& sample) {
  UnivariateSample out;
  for (const auto& s : sample)
    if (s.size() > 0) out.push_back(s);
  return out;
}

std::size_t total_observations(const UnivariateSample& sample) {
  std::size_t n = 0;
  for (const auto& s : sample) n += static_cast<std::size_t>(s.size());
  return n;
}

}  // namespace smfpca
