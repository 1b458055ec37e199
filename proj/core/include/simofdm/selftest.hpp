#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace simofdm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast invariant suite: codebook bijectivity, m-sequence autocorrelation, power conservation,
/// statistical orthogonality, noiseless end-to-end recovery, compensator norm, perfect-estimation
/// equivalent channel and deterministic reruns.
std::vector<CheckResult> run_selftest(std::uint64_t seed);

}  // namespace simofdm
