#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sfdnn {

enum class ErrorKind {
  kConfig,
  kInvalidArchitecture,
  kDimension,
  kInsufficientData,
  kInvalidSize,
  kDegenerateBandwidth,
  kDegenerateVariance,
  kOutsideAdmissibleRegion,
  kDesignRank,
  kNumericOverflow,
  kTrainingDiverged,
  kMissingWeights,
  kFoldSize,
  kData,
  kIo,
};

const char* to_string(ErrorKind kind);

/// CLI exit status for an error kind: 2 config, 3 data, 4 numerical.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string context = {})
      : std::runtime_error(message), kind_(kind), context_(std::move(context)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& context() const noexcept { return context_; }

 private:
  ErrorKind kind_;
  std::string context_;
};

/// Raised when the epoch loss becomes non-finite; keeps the trace up to that point.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& message, std::vector<double> trace)
      : Error(ErrorKind::kTrainingDiverged, message), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace sfdnn
