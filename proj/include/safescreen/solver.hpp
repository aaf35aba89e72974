#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safescreen/kernel.hpp"

namespace safescreen {

struct SolverConfig {
  double kkt_tolerance = 1e-9;
  std::size_t max_epochs = 10000;
  std::uint64_t shuffle_seed = 0;
  bool active_set_shrinking = false;
};

/// Box-feasible dual vector for one C, with margins_i = (Q alpha)_i = y_i f(x_i).
/// An empty `margins` vector marks them stale.
struct DualSolution {
  double C = 0.0;
  std::vector<double> alpha;
  std::vector<double> margins;

  std::size_t size() const noexcept { return alpha.size(); }
  bool fresh() const noexcept { return margins.size() == alpha.size(); }
};

struct ObjectiveReport {
  double dual_value = 0.0;
  double primal_value = 0.0;
  double gap = 0.0;
  double xi = 0.0;  // sum of hinge losses
};

struct KktPartition {
  std::vector<std::size_t> R;  // margin > 1 + band
  std::vector<std::size_t> E;  // |margin - 1| <= band
  std::vector<std::size_t> L;  // margin < 1 - band
};

/// D(alpha) = -1/2 alpha^T Q alpha + sum_i alpha_i.
double dual_objective(const KernelOracle& oracle, const DualSolution& solution);

/// Primal value, dual value, gap and hinge sum. Uses the cached margins
/// when fresh.
ObjectiveReport primal_objective(const KernelOracle& oracle, const DualSolution& solution);

/// Exact dual coordinate ascent on max D(alpha) s.t. 0 <= alpha <= C.
/// A warm start is clipped into [0, C]. Throws ConvergenceError after
/// max_epochs.
DualSolution solve(const KernelOracle& oracle, double C, const SolverConfig& config = {},
                   const DualSolution* warm_start = nullptr);

KktPartition kkt_partition(const DualSolution& solution, double band);

/// Largest single-coordinate violation of the box-QP optimality conditions,
/// using the solution's margins.
double max_kkt_violation(const DualSolution& solution);

/// Fills `margins` with Q alpha.
void refresh_margins(const KernelOracle& oracle, DualSolution& solution);

namespace detail {

/// Coordinate ascent restricted to `active`, with the remaining coordinates
/// held at their values in `alpha`. The gradient for active i is
/// 1 - offset_i - sum_{j in active} Q_ij alpha_j, so inactive coordinates must
/// contribute only through `offset` (full length, read at active indices).
/// Returns full-length alpha with fresh full margins.
DualSolution coordinate_ascent(const KernelOracle& oracle, double C,
                               std::span<const std::size_t> active,
                               std::span<const double> offset, std::vector<double> alpha,
                               const SolverConfig& config);

}  // namespace detail

}  // namespace safescreen
