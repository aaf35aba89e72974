#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "safescreen/kernel.hpp"
#include "safescreen/screening.hpp"
#include "safescreen/solver.hpp"

namespace safescreen {

struct PathConfig {
  double c_max = 1e4;
  double epsilon = 1e-3;
  ScreeningTest test = ScreeningTest::IT;
  SolverConfig solver;
  /// Full-problem KKT check of every reduced solution.
  bool verify = true;
  unsigned threads = 0;
};

struct PathStep {
  double C = 0.0;
  DualSolution solution;
  ObjectiveReport objective;
  std::size_t screened_R = 0;
  std::size_t screened_L = 0;
  std::size_t kept = 0;
  double rate_all = 0.0;
  std::size_t s_hat_delta = 0;
  bool verified = false;
  /// Worst full-problem KKT violation of the reduced solution, before any repair.
  double kkt_violation = 0.0;
  double seconds = 0.0;
};

enum class PathTermination { ReachedCMax, LEmpty };

struct PathResult {
  std::vector<PathStep> steps;
  PathTermination termination = PathTermination::ReachedCMax;

  bool all_verified() const;
};

std::string termination_reason(PathTermination t);

/// (P_C(w_c) - D_C(alpha_c)) / |D_C(alpha_c)| for alpha_c = (C / C_prev) alpha_prev;
/// +inf when D_C(alpha_c) <= 0. O(n) from the cached reference quantities.
double scaled_gap_certificate(const ReferenceSolution& prev, double C);

/// Largest C in (C_prev, c_max] whose scaled previous solution is certified
/// epsilon-accurate on [C_prev, C]. Throws StepCollapse.
double next_c(const ReferenceSolution& prev, double epsilon, double c_max);
double next_c(const DualSolution& prev, double epsilon, const KernelOracle& oracle, double c_max);

/// Hamming distance between two selection vectors.
std::size_t s_hat_delta(const SelectionVector& prev, const SelectionVector& next);

/// Q s_hat maintained across path steps by adding or subtracting only the
/// columns whose selection changed.
class SelectionCache {
 public:
  explicit SelectionCache(std::size_t n);

  /// Returns the number of changed entries.
  std::size_t update(const SelectionVector& next, const KernelOracle& oracle);

  const SelectionProduct& product() const noexcept { return product_; }

 private:
  SelectionProduct product_;
};

/// Epsilon-approximation regularization path from C_min upward with safe
/// screening at every step. Errors from a step are rethrown prefixed with
/// the step index.
PathResult run_path(const KernelOracle& oracle, const PathConfig& config);

}  // namespace safescreen
