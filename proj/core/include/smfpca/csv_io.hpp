#pragma once

#include "smfpca/dataset.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace smfpca {

enum class Transform { None, Sqrt, Log2 };

std::string to_string(Transform t);
Transform transform_from_string(const std::string& name);

struct IngestOptions {
  std::map<std::string, Transform> transforms;  ///< by variable name
  std::map<std::string, Interval> domains;      ///< default: observed time range
  /// Keep subjects with at least this many distinct visit times across
  /// all variables (0 keeps everyone).
  std::size_t min_visits = 0;
};

/// Reads long-format CSV with header columns subject_id, variable, t, y
/// (any order, extra columns ignored). Subjects and variables keep their
/// order of first appearance; times are sorted within each series.
/// Throws DataError with file and line context.
SparseDataset read_csv(const std::string& path, const IngestOptions& options = {});
SparseDataset parse_csv(std::istream& in, const std::string& label, const IngestOptions& options = {});

/// Writes the same schema with 17 significant digits, so reading the
/// output back reproduces every value exactly.
void write_csv(const SparseDataset& data, std::ostream& out);
void write_csv(const SparseDataset& data, const std::string& path);

/// Shortest-exact decimal text used by every CSV writer in the library.
std::string format_double(double v);

}  // namespace smfpca
