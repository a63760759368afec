#include "smfpca/config.hpp"

#include "smfpca/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace smfpca {

namespace {

using nlohmann::json;

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config key '" + key + "' has the wrong type");
  }
}

std::vector<int> positive_list(const json& j, const std::string& key) {
  auto v = get_as<std::vector<int>>(j, key);
  if (v.empty()) throw InvalidArgument("config key '" + key + "' must be a nonempty list");
  for (int x : v)
    if (x < 1) throw InvalidArgument("config key '" + key + "' must hold positive integers");
  return v;
}

}  // namespace

AnalysisConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InvalidArgument("config must be a JSON object");

  static const std::set<std::string> known{"basis_kind", "basis_order", "basis_counts", "ranks",     "grid_size",
                                           "mean_basis_count", "weights", "truncation",   "seed",      "restarts",
                                           "optimizer",  "domains",     "transforms",   "min_visits"};
  for (const auto& [key, _] : root.items())
    if (!known.count(key)) throw InvalidArgument("unknown config key '" + key + "'");

  AnalysisConfig cfg;
  SelectionOptions& sel = cfg.pipeline.selection;
  if (root.contains("basis_kind")) sel.kind = basis_kind_from_string(get_as<std::string>(root["basis_kind"], "basis_kind"));
  if (root.contains("basis_order")) {
    sel.order = get_as<int>(root["basis_order"], "basis_order");
    if (sel.order < 2) throw InvalidArgument("basis_order must be at least 2");
  }
  if (root.contains("basis_counts")) sel.basis_counts = positive_list(root["basis_counts"], "basis_counts");
  if (root.contains("ranks")) sel.ranks = positive_list(root["ranks"], "ranks");
  if (root.contains("grid_size")) {
    const int h = get_as<int>(root["grid_size"], "grid_size");
    if (h < 3) throw InvalidArgument("grid_size must be at least 3");
    cfg.pipeline.grid_size = static_cast<std::size_t>(h);
  }
  if (root.contains("mean_basis_count")) {
    const int u = get_as<int>(root["mean_basis_count"], "mean_basis_count");
    if (u < 1) throw InvalidArgument("mean_basis_count must be positive");
    cfg.pipeline.mean_basis_count = u;
  }
  if (root.contains("truncation")) {
    const int m = get_as<int>(root["truncation"], "truncation");
    if (m < 1) throw InvalidArgument("truncation must be positive");
    cfg.pipeline.truncation = m;
  }
  if (root.contains("seed")) sel.fit.seed = get_as<std::uint64_t>(root["seed"], "seed");
  if (root.contains("restarts")) {
    sel.fit.restarts = get_as<int>(root["restarts"], "restarts");
    if (sel.fit.restarts < 0) throw InvalidArgument("restarts must be nonnegative");
  }
  if (root.contains("optimizer")) {
    const json& o = root["optimizer"];
    if (!o.is_object()) throw InvalidArgument("optimizer must be an object");
    for (const auto& [key, v] : o.items()) {
      if (key == "grad_tol") sel.fit.bfgs.grad_tol = get_as<double>(v, "optimizer.grad_tol");
      else if (key == "f_tol") sel.fit.bfgs.f_tol = get_as<double>(v, "optimizer.f_tol");
      else if (key == "max_iterations") sel.fit.bfgs.max_iterations = get_as<int>(v, "optimizer.max_iterations");
      else throw InvalidArgument("unknown optimizer key '" + key + "'");
    }
    if (!(sel.fit.bfgs.grad_tol > 0.0) || !(sel.fit.bfgs.f_tol >= 0.0) || sel.fit.bfgs.max_iterations < 1)
      throw InvalidArgument("optimizer tolerances must be positive");
  }
  if (root.contains("weights")) {
    if (!root["weights"].is_object()) throw InvalidArgument("weights must map variable names to numbers");
    for (const auto& [name, v] : root["weights"].items()) {
      const double w = get_as<double>(v, "weights." + name);
      if (!(w > 0.0)) throw InvalidArgument("weight of '" + name + "' must be positive");
      cfg.weights[name] = w;
    }
  }
  if (root.contains("domains")) {
    if (!root["domains"].is_object()) throw InvalidArgument("domains must map variable names to [lo, hi]");
    for (const auto& [name, v] : root["domains"].items()) {
      const auto d = get_as<std::vector<double>>(v, "domains." + name);
      if (d.size() != 2 || !(d[0] < d[1])) throw InvalidArgument("domain of '" + name + "' must be [lo, hi] with lo < hi");
      cfg.ingest.domains[name] = {d[0], d[1]};
    }
  }
  if (root.contains("transforms")) {
    if (!root["transforms"].is_object()) throw InvalidArgument("transforms must map variable names to names");
    for (const auto& [name, v] : root["transforms"].items())
      cfg.ingest.transforms[name] = transform_from_string(get_as<std::string>(v, "transforms." + name));
  }
  if (root.contains("min_visits")) {
    const int k = get_as<int>(root["min_visits"], "min_visits");
    if (k < 0) throw InvalidArgument("min_visits must be nonnegative");
    cfg.ingest.min_visits = static_cast<std::size_t>(k);
  }
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileAccessError(path, 0, "cannot open config file");
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return parse_config(os.str());
  } catch (const InvalidArgument& e) {
    throw DataError(path, 0, e.what());
  }
}

std::string config_json(const AnalysisConfig& config) {
  const SelectionOptions& sel = config.pipeline.selection;
  nlohmann::ordered_json j;
  j["basis_kind"] = to_string(sel.kind);
  j["basis_order"] = sel.order;
  j["basis_counts"] = sel.basis_counts;
  j["ranks"] = sel.ranks;
  j["grid_size"] = config.pipeline.grid_size;
  if (config.pipeline.mean_basis_count) j["mean_basis_count"] = *config.pipeline.mean_basis_count;
  j["weights"] = config.weights;
  if (config.pipeline.truncation) j["truncation"] = *config.pipeline.truncation;
  j["seed"] = sel.fit.seed;
  j["restarts"] = sel.fit.restarts;
  j["optimizer"] = {{"grad_tol", sel.fit.bfgs.grad_tol},
                    {"f_tol", sel.fit.bfgs.f_tol},
                    {"max_iterations", sel.fit.bfgs.max_iterations}};
  nlohmann::ordered_json domains = nlohmann::ordered_json::object();
  for (const auto& [name, d] : config.ingest.domains) domains[name] = {d.lo, d.hi};
  j["domains"] = domains;
  nlohmann::ordered_json transforms = nlohmann::ordered_json::object();
  for (const auto& [name, t] : config.ingest.transforms) transforms[name] = to_string(t);
  j["transforms"] = transforms;
  j["min_visits"] = config.ingest.min_visits;
  return j.dump(2);
}

std::vector<double> resolve_weights(const AnalysisConfig& config, const SparseDataset& data) {
  std::vector<double> w(data.num_variables(), 1.0);
  for (const auto& [name, value] : config.weights) w[data.variable_index(name)] = value;
  return w;
}

}  // namespace smfpca
