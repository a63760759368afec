#include "smfpca/errors.hpp"

#include <sstream>

namespace smfpca {

DataError::DataError(const std::string& file, std::size_t line, const std::string& msg)
    : Error(file + ":" + std::to_string(line) + ": " + msg), file_(file), line_(line) {}

namespace {

std::string summarize(const std::string& head, const std::vector<FailureRecord>& failures) {
  std::ostringstream os;
  os << head;
  for (const auto& f : failures) os << "\n  [" << f.label << "] " << f.kind << ": " << f.message;
  return os.str();
}

}  // namespace

SelectionFailed::SelectionFailed(std::vector<FailureRecord> failures)
    : Error(summarize("every (U, M) candidate failed", failures)), failures_(std::move(failures)) {}

BenchmarkFailed::BenchmarkFailed(std::vector<FailureRecord> failures, std::size_t replicates)
    : Error(summarize(std::to_string(failures.size()) + " of " + std::to_string(replicates) +
                          " replicates failed",
                      failures)),
      failures_(std::move(failures)) {}

}  // namespace smfpca
