#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace smfpca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable tag, e.g. "invalid-argument".
  virtual const char* kind() const noexcept = 0;
};

#define SMFPCA_DECLARE_ERROR(Name, tag)                        \
  class Name : public Error {                                  \
   public:                                                     \
    using Error::Error;                                        \
    const char* kind() const noexcept override { return tag; } \
  };

SMFPCA_DECLARE_ERROR(InvalidArgument, "invalid-argument")
SMFPCA_DECLARE_ERROR(DomainError, "domain-error")
SMFPCA_DECLARE_ERROR(InsufficientData, "insufficient-data")
SMFPCA_DECLARE_ERROR(MissingModel, "missing-model")
SMFPCA_DECLARE_ERROR(AlignmentError, "alignment-error")
SMFPCA_DECLARE_ERROR(DivergedError, "diverged")

#undef SMFPCA_DECLARE_ERROR

/// Basis or Gram matrix too close to singular to invert.
class IllConditionedBasis : public Error {
 public:
  IllConditionedBasis(const std::string& what, double smallest_eigenvalue)
      : Error(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  const char* kind() const noexcept override { return "ill-conditioned-basis"; }
  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

/// Gram-Schmidt pivot fell below threshold at column `column`.
class RankDeficiency : public Error {
 public:
  RankDeficiency(const std::string& what, std::size_t column)
      : Error(what), column_(column) {}
  const char* kind() const noexcept override { return "rank-deficiency"; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Parse or schema problem in an input file; carries file/line context.
class DataError : public Error {
 public:
  DataError(const std::string& file, std::size_t line, const std::string& msg);
  const char* kind() const noexcept override { return "data-error"; }
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Input file with no data rows.
class EmptyInput : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "empty-input"; }
};

/// File missing, unreadable or unwritable.
class FileAccessError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "file-access"; }
};

/// One failed attempt inside an aggregate operation.
struct FailureRecord {
  std::string label;
  std::string kind;
  std::string message;
};

/// Every candidate of a model-selection sweep failed.
class SelectionFailed : public Error {
 public:
  explicit SelectionFailed(std::vector<FailureRecord> failures);
  const char* kind() const noexcept override { return "selection-failed"; }
  const std::vector<FailureRecord>& failures() const noexcept { return failures_; }

 private:
  std::vector<FailureRecord> failures_;
};

/// Too many replicates failed during a benchmark run.
class BenchmarkFailed : public Error {
 public:
  BenchmarkFailed(std::vector<FailureRecord> failures, std::size_t replicates);
  const char* kind() const noexcept override { return "benchmark-failed"; }
  const std::vector<FailureRecord>& failures() const noexcept { return failures_; }

 private:
  std::vector<FailureRecord> failures_;
};

}  // namespace smfpca
