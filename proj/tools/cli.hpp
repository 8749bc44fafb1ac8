#pragma once

#include <string>
#include <vector>

namespace ucnn::cli {

// Exit codes, one per error class.
enum Exit : int {
  kOk = 0,
  kError = 1,  // unclassified failure
  kUsage = 2,
  kSchema = 3,
  kValidation = 4,
  kMissingArtifact = 5,
  kFingerprint = 6,
  kDisjointness = 7,
  kPrecondition = 8,
  kNumerical = 9,
  kPending = 10,  // external-solver mode: some scenarios still unsolved
};

/// Entry point; args excludes the program name. Diagnostics go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace ucnn::cli
