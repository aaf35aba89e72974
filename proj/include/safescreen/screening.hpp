#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safescreen/kernel.hpp"
#include "safescreen/solver.hpp"

namespace safescreen {

/// An optimal solution at a smaller C, with the cached quantities every
/// rule needs: margins (Q alpha), hinge sum xi and ||w||^2 = alpha^T Q alpha.
struct ReferenceSolution {
  double C = 0.0;
  std::vector<double> alpha;
  std::vector<double> margins;
  double xi = 0.0;
  double norm_sq = 0.0;

  std::size_t size() const noexcept { return alpha.size(); }
};

/// Feature-space ball with center m = sum_i beta_i z_i. `center_dot` holds
/// z_i^T m = (Q beta)_i and `center_norm_sq` holds ||m||^2.
struct Ball {
  std::vector<double> beta;
  double radius = 0.0;
  std::vector<double> center_dot;
  double center_norm_sq = 0.0;
};

struct SelectionVector {
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }
  std::size_t count() const noexcept;
  bool operator==(const SelectionVector&) const = default;
};

/// A selection vector together with Q s_hat.
struct SelectionProduct {
  SelectionVector s_hat;
  std::vector<double> q_s_hat;
};

struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
};

enum class SampleStatus : std::uint8_t { ScreenedR, ScreenedL, Unknown };

enum class ScreeningTest { BT1, BT2, IT, DT };

std::string_view test_name(ScreeningTest test);
/// Accepts "bt1", "bt2", "it", "dt" in any case.
ScreeningTest parse_test(std::string_view name);

struct ScreeningReport {
  ScreeningTest test = ScreeningTest::IT;
  double C = 0.0;
  double C_ref = 0.0;
  std::vector<SampleStatus> statuses;
  std::vector<BoundPair> bounds;
  std::size_t screened_R = 0;
  std::size_t screened_L = 0;
  double rate_all = 0.0;
  /// Screened non-SVs over |R| + |L|; needs the exact partition at C.
  std::optional<double> rate_nonsv;

  std::size_t size() const noexcept { return statuses.size(); }
};

/// Lens geometry of two intersecting balls: phi = m1 - m2,
/// zeta = (|phi|^2 + r2^2 - r1^2) / (2|phi|), psi = m2 + zeta phi / |phi|,
/// kappa = sqrt(r2^2 - zeta^2). `mode` records the degenerate dispatch.
struct IntersectionGeometry {
  enum class Mode { Lens, UseBall1, UseBall2 };

  Mode mode = Mode::Lens;
  std::vector<double> phi_dot;
  double phi_norm = 0.0;
  double zeta = 0.0;
  std::vector<double> psi_dot;
  double kappa = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

/// Training problem over the samples that survived screening. The linear
/// term of kept sample kept[k] is 1 - d_offsets[k] with d = C sum_{j in L'} Q_ij.
struct ReducedProblem {
  double C = 0.0;
  std::vector<std::size_t> kept;
  std::vector<double> d_offsets;
  std::vector<std::size_t> fixed_L;
  std::vector<std::size_t> fixed_R;
};

/// 1 / max_i (Q 1)_i. Throws NumericalInconsistency if the max is not positive.
double c_min(const KernelOracle& oracle);

/// Recomputes margins when stale.
ReferenceSolution make_reference(const DualSolution& solution, const KernelOracle& oracle);

SelectionVector select_s_hat(const ReferenceSolution& ref, double C);

/// BT1 ball specialised to the reference: m1 = (C + C_ref)/(2 C_ref) w_ref,
/// r1 = (C - C_ref)/(2 C_ref) ||w_ref||. Requires C >= C_ref.
Ball ball_bt1(const ReferenceSolution& ref, double C);

/// BT2 ball: m2 = (w_ref + C z_s)/2, r2 = sqrt(||m2||^2 + C (xi_ref - s^T 1)).
Ball ball_bt2(const ReferenceSolution& ref, const SelectionVector& s_hat, double C,
              const KernelOracle& oracle);
/// Same, with Q s_hat supplied by the caller.
Ball ball_bt2(const ReferenceSolution& ref, const SelectionProduct& selection, double C);

/// z_i^T m -/+ r ||z_i||.
BoundPair ball_bounds(const Ball& ball, std::size_t i, const KernelOracle& oracle);

IntersectionGeometry intersection_geometry(const Ball& ball1, const Ball& ball2);

/// Bounds of z_i^T w over the intersection of the BT1 ball (ball1) and the
/// BT2 ball (ball2).
BoundPair intersection_bounds(const Ball& ball1, const Ball& ball2, std::size_t i,
                              const KernelOracle& oracle, const IntersectionGeometry& geom);

/// Dome region {||w||^2 <= gamma_b, w_a^T w >= gamma_a} for C in [C_a, C_b],
/// where ref_a is the optimum at C_a and gamma_b = ||w*_{C_b}||^2.
BoundPair dome_bounds(const ReferenceSolution& ref_a, double gamma_b, double C, std::size_t i,
                      const KernelOracle& oracle);

/// BT1 lower bound written purely in dual variables; independent of Ball.
double bt1_dual_form(const ReferenceSolution& ref, double C, std::size_t i,
                     const KernelOracle& oracle);

struct ScreenOptions {
  /// ||w*_{C_b}||^2 for the dome test.
  std::optional<double> dome_gamma_b;
  /// Precomputed s_hat with Q s_hat; must equal select_s_hat(ref, C).
  const SelectionProduct* selection = nullptr;
  unsigned threads = 0;
  /// A sample is screened only when its bound clears 1 by more than this.
  /// When the region collapses onto the margin (all samples on it, w
  /// unchanged between C_ref and C) the bounds equal 1 up to roundoff and
  /// the reference's own KKT error.
  double slack = 1e-8;
};

ScreeningReport screen(const ReferenceSolution& ref, double C, ScreeningTest test,
                       const KernelOracle& oracle, const ScreenOptions& options = {});

/// Fills report.rate_nonsv from the exact partition at report.C. The rate is
/// NaN when R and L are both empty.
void attach_exact_partition(ScreeningReport& report, const KktPartition& exact);

/// Screened samples contradicted by an exact solution: ScreenedR with
/// alpha > alpha_tol, or ScreenedL with alpha < C - alpha_tol.
std::size_t count_violations(const ScreeningReport& report, const DualSolution& exact,
                             double alpha_tol);

ReducedProblem reduce_problem(const ScreeningReport& report, const KernelOracle& oracle);

/// Solves the reduced problem and expands to a full-length solution with
/// alpha = 0 on fixed_R and alpha = C on fixed_L.
DualSolution solve_reduced(const ReducedProblem& reduced, const KernelOracle& oracle,
                           const SolverConfig& config, const DualSolution* warm_start = nullptr);

/// One row of a screening-rate sweep.
struct RateRow {
  double ratio = 0.0;  // C_ref / C
  double bt1 = 0.0;
  double bt2 = 0.0;
  double it = 0.0;
};

/// Solves exactly at C and at every C_ref = ratio * C (ascending, warm
/// started), then reports the fraction of non-SVs screened by BT1, BT2, IT.
/// `band` classifies the exact margins into R/E/L.
std::vector<RateRow> rate_sweep(const KernelOracle& oracle, double C,
                                std::span<const double> ratios, const SolverConfig& config,
                                double band = 1e-6, unsigned threads = 0);

namespace detail {

/// Squared radius with roundoff clamped to 0; genuinely negative values throw.
double checked_radius(double radius_sq, double scale);

/// BT1 from an arbitrary feasible point and the optimum at another C.
Ball ball_bt1_general(const ReferenceSolution& feasible, const ReferenceSolution& other_optimum,
                      double C);

/// BT2 from an arbitrary feasible point (its xi may exceed its hinge sum).
Ball ball_bt2_general(const ReferenceSolution& feasible, const SelectionProduct& selection,
                      double C);

}  // namespace detail

}  // namespace safescreen
