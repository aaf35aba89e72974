#include "safescreen/path.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "safescreen/errors.hpp"

namespace safescreen {

namespace {

// Margin band used to decide whether L is empty along the path.
constexpr double kPartitionBand = 1e-6;
// Bisection stops once the bracket on C is this narrow (relative).
constexpr double kBisectionWidth = 1e-3;
constexpr int kValidationPoints = 32;

}  // namespace

bool PathResult::all_verified() const {
  return std::all_of(steps.begin(), steps.end(), [](const PathStep& s) { return s.verified; });
}

std::string termination_reason(PathTermination t) {
  return t == PathTermination::LEmpty ? "L empty" : "reached c-max";
}

double scaled_gap_certificate(const ReferenceSolution& prev, double C) {
  const double t = C / prev.C;
  double alpha_sum = 0.0, hinge = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    alpha_sum += prev.alpha[i];
    hinge += std::max(0.0, 1.0 - t * prev.margins[i]);
  }
  const double quad = t * t * prev.norm_sq;
  const double dual = t * alpha_sum - 0.5 * quad;
  if (!(dual > 0.0)) return std::numeric_limits<double>::infinity();
  const double primal = 0.5 * quad + C * hinge;
  return (primal - dual) / std::abs(dual);
}

double next_c(const ReferenceSolution& prev, double epsilon, double c_max) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const double c_prev = prev.C;
  if (!(c_max > c_prev)) throw std::invalid_argument("c_max must exceed the previous C");
  auto certified = [&](double C) { return scaled_gap_certificate(prev, C) <= epsilon; };

  double lo = c_prev;
  double hi = std::numeric_limits<double>::infinity();
  for (double factor = 2.0;; factor *= 2.0) {
    const double candidate = std::min(c_prev * factor, c_max);
    if (!certified(candidate)) {
      hi = candidate;
      break;
    }
    lo = candidate;
    if (candidate >= c_max) break;
  }

  // The certificate is checked on a grid over [C_prev, lo] afterwards; a
  // failure there restarts the bisection below the failing point.
  for (;;) {
    if (std::isfinite(hi)) {
      while (hi - lo > kBisectionWidth * lo || lo == c_prev) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (certified(mid) ? lo : hi) = mid;
      }
      if (lo == c_prev)
        throw StepCollapse("no C above " + std::to_string(c_prev) +
                               " satisfies the epsilon certificate",
                           scaled_gap_certificate(prev, hi));
    }
    double failure = 0.0;
    for (int k = 1; k < kValidationPoints; ++k) {
      const double C = c_prev + (lo - c_prev) * k / kValidationPoints;
      if (!certified(C)) {
        failure = C;
        break;
      }
    }
    if (failure == 0.0) return lo;
    lo = c_prev;
    hi = failure;
  }
}

double next_c(const DualSolution& prev, double epsilon, const KernelOracle& oracle, double c_max) {
  return next_c(make_reference(prev, oracle), epsilon, c_max);
}

std::size_t s_hat_delta(const SelectionVector& prev, const SelectionVector& next) {
  if (prev.size() != next.size()) throw std::invalid_argument("s_hat_delta: length mismatch");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < prev.size(); ++i) changed += prev.bits[i] != next.bits[i];
  return changed;
}

SelectionCache::SelectionCache(std::size_t n) {
  product_.s_hat.bits.assign(n, 0);
  product_.q_s_hat.assign(n, 0.0);
}

std::size_t SelectionCache::update(const SelectionVector& next, const KernelOracle& oracle) {
  const std::size_t changed = s_hat_delta(product_.s_hat, next);
  auto& q = product_.q_s_hat;
  for (std::size_t j = 0; j < next.size(); ++j) {
    if (product_.s_hat.bits[j] == next.bits[j]) continue;
    const double sign = next.bits[j] ? 1.0 : -1.0;
    const auto row = oracle.q_row(j);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += sign * (*row)[i];
  }
  product_.s_hat = next;
  return changed;
}

namespace {

template <typename Error>
[[noreturn]] void rethrow_at_step(const Error& e, std::size_t step);

template <>
[[noreturn]] void rethrow_at_step(const StepCollapse& e, std::size_t step) {
  throw StepCollapse("path step " + std::to_string(step) + ": " + e.what(), e.gap());
}
template <>
[[noreturn]] void rethrow_at_step(const ConvergenceError& e, std::size_t step) {
  throw ConvergenceError("path step " + std::to_string(step) + ": " + e.what(),
                         e.worst_violation());
}
template <>
[[noreturn]] void rethrow_at_step(const NumericalInconsistency& e, std::size_t step) {
  throw NumericalInconsistency("path step " + std::to_string(step) + ": " + e.what());
}

}  // namespace

PathResult run_path(const KernelOracle& oracle, const PathConfig& config) {
  using Clock = std::chrono::steady_clock;
  if (!(config.c_max > 0.0)) throw std::invalid_argument("c_max must be positive");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (config.test == ScreeningTest::DT)
    throw std::invalid_argument("the dome test needs a solution above C and cannot drive the path");

  const std::size_t n = oracle.size();
  const double tol = config.solver.kkt_tolerance;
  PathResult result;

  auto start = Clock::now();
  const double first_c = c_min(oracle);
  DualSolution current{first_c, std::vector<double>(n, first_c), {}};
  refresh_margins(oracle, current);
  {
    PathStep step;
    step.C = first_c;
    step.objective = primal_objective(oracle, current);
    step.kept = n;
    step.kkt_violation = max_kkt_violation(current);
    step.verified = config.verify && step.kkt_violation <= tol;
    step.solution = current;
    step.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    result.steps.push_back(std::move(step));
  }

  SelectionCache selection(n);
  const bool needs_selection = config.test == ScreeningTest::BT2 || config.test == ScreeningTest::IT;
  bool l_empty = kkt_partition(current, kPartitionBand).L.empty();

  while (!l_empty && current.C < config.c_max) {
    const std::size_t index = result.steps.size();
    start = Clock::now();
    try {
      const ReferenceSolution ref = make_reference(current, oracle);
      const double C = next_c(ref, config.epsilon, config.c_max);

      PathStep step;
      step.C = C;
      ScreenOptions options;
      options.threads = config.threads;
      if (needs_selection) {
        step.s_hat_delta = selection.update(select_s_hat(ref, C), oracle);
        options.selection = &selection.product();
      }
      const ScreeningReport report = screen(ref, C, config.test, oracle, options);
      const ReducedProblem reduced = reduce_problem(report, oracle);
      // The scaled previous optimum is the point the step was certified
      // with and usually lies very close to the new optimum.
      DualSolution warm{C, current.alpha, {}};
      for (double& a : warm.alpha) a *= C / current.C;
      DualSolution next = solve_reduced(reduced, oracle, config.solver, &warm);

      step.screened_R = report.screened_R;
      step.screened_L = report.screened_L;
      step.kept = reduced.kept.size();
      step.rate_all = report.rate_all;
      if (config.verify) {
        step.kkt_violation = max_kkt_violation(next);
        step.verified = step.kkt_violation <= tol;
        // A screening error would leave a wrong optimum; finish on the full
        // problem so later steps start from the true solution.
        if (!step.verified) next = solve(oracle, C, config.solver, &next);
      }
      step.objective = primal_objective(oracle, next);
      step.solution = next;
      step.seconds = std::chrono::duration<double>(Clock::now() - start).count();
      result.steps.push_back(std::move(step));
      current = std::move(next);
    } catch (const StepCollapse& e) {
      rethrow_at_step(e, index);
    } catch (const ConvergenceError& e) {
      rethrow_at_step(e, index);
    } catch (const NumericalInconsistency& e) {
      rethrow_at_step(e, index);
    }
    l_empty = kkt_partition(current, kPartitionBand).L.empty();
  }
  result.termination = l_empty ? PathTermination::LEmpty : PathTermination::ReachedCMax;
  return result;
}

}  // namespace safescreen
