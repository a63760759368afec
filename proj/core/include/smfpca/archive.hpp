#pragma once

#include "smfpca/mfpca.hpp"
#include "smfpca/simgen.hpp"

#include <cstdint>
#include <string>

namespace smfpca {

inline constexpr int kArchiveFormatVersion = 1;

struct Provenance {
  std::uint64_t seed = 0;
  std::string invocation;
  std::string timestamp;  ///< ISO 8601, UTC
  std::string config;     ///< JSON text of the fitting configuration
};

struct ModelArchive {
  MultivariateModel model;
  Provenance provenance;
};

/// JSON text. Numbers are written in shortest round-trip form, so
/// parse_archive(archive_json(a)) reproduces every value bit for bit.
std::string archive_json(const ModelArchive& archive);
/// Throws DataError on malformed input or an unsupported format_version.
ModelArchive parse_archive(const std::string& text, const std::string& label = "<archive>");

void save_archive(const ModelArchive& archive, const std::string& path);
ModelArchive load_archive(const std::string& path);

std::string truth_json(const TruthBundle& truth);
TruthBundle parse_truth(const std::string& text, const std::string& label = "<truth>");

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace smfpca
