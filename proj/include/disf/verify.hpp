#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace disf {

struct VerifyOptions {
  std::size_t n = 4096;
  std::size_t dim = 64;
  std::uint64_t seed = 42;
  std::size_t workers = 1;
  // Corrupts the Gram accumulator cache so the agreement check must fail.
  bool inject_gram_fault = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Built-in self checks: covariance norm identity residuals, incremental vs dense Gram norms,
// greedy vs step-wise exhaustive argmax, and worker-count determinism.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

}  // namespace disf
