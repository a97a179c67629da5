#include "sfdnn/error.hpp"

namespace sfdnn {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInvalidArchitecture: return "invalid_architecture";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kInsufficientData: return "insufficient_data";
    case ErrorKind::kInvalidSize: return "invalid_size";
    case ErrorKind::kDegenerateBandwidth: return "degenerate_bandwidth";
    case ErrorKind::kDegenerateVariance: return "degenerate_variance";
    case ErrorKind::kOutsideAdmissibleRegion: return "outside_admissible_region";
    case ErrorKind::kDesignRank: return "design_rank";
    case ErrorKind::kNumericOverflow: return "numeric_overflow";
    case ErrorKind::kTrainingDiverged: return "training_diverged";
    case ErrorKind::kMissingWeights: return "missing_weights";
    case ErrorKind::kFoldSize: return "fold_size";
    case ErrorKind::kData: return "data";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArchitecture:
      return 2;
    case ErrorKind::kDimension:
    case ErrorKind::kInsufficientData:
    case ErrorKind::kInvalidSize:
    case ErrorKind::kDegenerateBandwidth:
    case ErrorKind::kDegenerateVariance:
    case ErrorKind::kMissingWeights:
    case ErrorKind::kFoldSize:
    case ErrorKind::kData:
    case ErrorKind::kIo:
      return 3;
    case ErrorKind::kOutsideAdmissibleRegion:
    case ErrorKind::kDesignRank:
    case ErrorKind::kNumericOverflow:
    case ErrorKind::kTrainingDiverged:
      return 4;
  }
  return 4;
}

}  // namespace sfdnn
