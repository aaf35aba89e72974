#include "safescreen/screening.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "safescreen/errors.hpp"
#include "safescreen/parallel.hpp"

namespace safescreen {

std::size_t SelectionVector::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::string_view test_name(ScreeningTest test) {
  switch (test) {
    case ScreeningTest::BT1: return "BT1";
    case ScreeningTest::BT2: return "BT2";
    case ScreeningTest::IT: return "IT";
    case ScreeningTest::DT: return "DT";
  }
  return "?";
}

ScreeningTest parse_test(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bt1") return ScreeningTest::BT1;
  if (lower == "bt2") return ScreeningTest::BT2;
  if (lower == "it") return ScreeningTest::IT;
  if (lower == "dt") return ScreeningTest::DT;
  throw std::invalid_argument("unknown screening test '" + std::string(name) + "'");
}

double c_min(const KernelOracle& oracle) {
  const std::vector<double> ones(oracle.size(), 1.0);
  const auto q1 = oracle.q_matvec(ones);
  const double max_row = *std::max_element(q1.begin(), q1.end());
  if (!(max_row > 0.0))
    throw NumericalInconsistency("max_i (Q 1)_i is not positive; kernel matrix is inconsistent");
  return 1.0 / max_row;
}

ReferenceSolution make_reference(const DualSolution& solution, const KernelOracle& oracle) {
  if (solution.alpha.size() != oracle.size())
    throw std::invalid_argument("reference solution length mismatch");
  if (!(solution.C > 0.0)) throw std::invalid_argument("reference C must be positive");
  ReferenceSolution ref;
  ref.C = solution.C;
  ref.alpha = solution.alpha;
  ref.margins = solution.fresh() ? solution.margins : oracle.q_matvec(solution.alpha);
  for (std::size_t i = 0; i < ref.alpha.size(); ++i) {
    ref.xi += std::max(0.0, 1.0 - ref.margins[i]);
    ref.norm_sq += ref.alpha[i] * ref.margins[i];
  }
  ref.norm_sq = std::max(0.0, ref.norm_sq);
  return ref;
}

namespace {

void require_not_below_reference(const ReferenceSolution& ref, double C) {
  if (!(C >= ref.C))
    throw std::invalid_argument("screening C (" + std::to_string(C) +
                                ") must not be below the reference C (" +
                                std::to_string(ref.C) + ")");
}

double bt1_center_scale(const ReferenceSolution& ref, double C) {
  return (C + ref.C) / (2.0 * ref.C);
}

}  // namespace

SelectionVector select_s_hat(const ReferenceSolution& ref, double C) {
  require_not_below_reference(ref, C);
  const double scale = bt1_center_scale(ref, C);
  SelectionVector s;
  s.bits.resize(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i)
    s.bits[i] = 1.0 - scale * ref.margins[i] > 0.0 ? 1 : 0;
  return s;
}

namespace detail {

double checked_radius(double radius_sq, double scale) {
  if (radius_sq >= 0.0) return std::sqrt(radius_sq);
  if (radius_sq >= -1e-9 * std::max(1.0, scale)) return 0.0;
  throw NumericalInconsistency("negative squared ball radius (" + std::to_string(radius_sq) +
                               "); the reference solution violates a necessary condition");
}

Ball ball_bt1_general(const ReferenceSolution& feasible, const ReferenceSolution& other_optimum,
                      double C) {
  const std::size_t n = feasible.size();
  if (other_optimum.size() != n) throw std::invalid_argument("ball_bt1_general: length mismatch");
  const double ratio = C / other_optimum.C;
  Ball ball;
  ball.beta.resize(n);
  ball.center_dot.resize(n);
  double cross = 0.0;  // w_feasible^T w_other
  for (std::size_t i = 0; i < n; ++i) {
    ball.beta[i] = 0.5 * (feasible.alpha[i] + ratio * other_optimum.alpha[i]);
    ball.center_dot[i] = 0.5 * (feasible.margins[i] + ratio * other_optimum.margins[i]);
    cross += feasible.alpha[i] * other_optimum.margins[i];
  }
  ball.center_norm_sq = std::max(
      0.0, 0.25 * (feasible.norm_sq + 2.0 * ratio * cross + ratio * ratio * other_optimum.norm_sq));
  const double radius_sq = ball.center_norm_sq - ratio * other_optimum.norm_sq +
                           C * (feasible.xi - other_optimum.xi);
  const double scale = std::max({ball.center_norm_sq, ratio * other_optimum.norm_sq,
                                 C * feasible.xi, C * other_optimum.xi});
  ball.radius = checked_radius(radius_sq, scale);
  return ball;
}

Ball ball_bt2_general(const ReferenceSolution& feasible, const SelectionProduct& selection,
                      double C) {
  const std::size_t n = feasible.size();
  if (selection.s_hat.size() != n || selection.q_s_hat.size() != n)
    throw std::invalid_argument("ball_bt2: selection length mismatch");
  Ball ball;
  ball.beta.resize(n);
  ball.center_dot.resize(n);
  double s_dot_margin = 0.0;  // w^T z_s
  double s_q_s = 0.0;         // ||z_s||^2
  std::size_t s_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = selection.s_hat.bits[i];
    ball.beta[i] = 0.5 * (feasible.alpha[i] + C * s);
    ball.center_dot[i] = 0.5 * (feasible.margins[i] + C * selection.q_s_hat[i]);
    if (s != 0.0) {
      s_dot_margin += feasible.margins[i];
      s_q_s += selection.q_s_hat[i];
      ++s_count;
    }
  }
  ball.center_norm_sq =
      std::max(0.0, 0.25 * (feasible.norm_sq + 2.0 * C * s_dot_margin + C * C * s_q_s));
  const double s_total = static_cast<double>(s_count);
  const double radius_sq = ball.center_norm_sq + C * (feasible.xi - s_total);
  const double scale = std::max({ball.center_norm_sq, C * feasible.xi, C * s_total});
  ball.radius = checked_radius(radius_sq, scale);
  return ball;
}

}  // namespace detail

Ball ball_bt1(const ReferenceSolution& ref, double C) {
  require_not_below_reference(ref, C);
  const double scale = bt1_center_scale(ref, C);
  Ball ball;
  ball.beta.resize(ref.size());
  ball.center_dot.resize(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ball.beta[i] = scale * ref.alpha[i];
    ball.center_dot[i] = scale * ref.margins[i];
  }
  ball.radius = (C - ref.C) / (2.0 * ref.C) * std::sqrt(ref.norm_sq);
  ball.center_norm_sq = scale * scale * ref.norm_sq;
  return ball;
}

Ball ball_bt2(const ReferenceSolution& ref, const SelectionProduct& selection, double C) {
  if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
  return detail::ball_bt2_general(ref, selection, C);
}

Ball ball_bt2(const ReferenceSolution& ref, const SelectionVector& s_hat, double C,
              const KernelOracle& oracle) {
  SelectionProduct selection;
  selection.s_hat = s_hat;
  std::vector<double> s(s_hat.size());
  std::copy(s_hat.bits.begin(), s_hat.bits.end(), s.begin());
  selection.q_s_hat = oracle.q_matvec(s);
  return ball_bt2(ref, selection, C);
}

BoundPair ball_bounds(const Ball& ball, std::size_t i, const KernelOracle& oracle) {
  const double reach = ball.radius * std::sqrt(oracle.q_diag(i));
  return {ball.center_dot[i] - reach, ball.center_dot[i] + reach};
}

IntersectionGeometry intersection_geometry(const Ball& ball1, const Ball& ball2) {
  const std::size_t n = ball1.beta.size();
  if (ball2.beta.size() != n) throw std::invalid_argument("intersection: length mismatch");
  IntersectionGeometry geom;
  geom.r1 = ball1.radius;
  geom.r2 = ball2.radius;

  double m1_dot_m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) m1_dot_m2 += ball1.beta[i] * ball2.center_dot[i];
  const double phi_sq =
      std::max(0.0, ball1.center_norm_sq + ball2.center_norm_sq - 2.0 * m1_dot_m2);
  geom.phi_norm = std::sqrt(phi_sq);
  geom.phi_dot.resize(n);
  for (std::size_t i = 0; i < n; ++i) geom.phi_dot[i] = ball1.center_dot[i] - ball2.center_dot[i];

  const double phi = geom.phi_norm, r1 = geom.r1, r2 = geom.r2;
  const double slack = 1e-12 * std::max(1.0, r1 + r2);
  if (phi <= 1e-12) {
    geom.mode = r1 <= r2 ? IntersectionGeometry::Mode::UseBall1 : IntersectionGeometry::Mode::UseBall2;
    return geom;
  }
  if (phi + r1 <= r2 + slack) {
    geom.mode = IntersectionGeometry::Mode::UseBall1;
    return geom;
  }
  if (phi + r2 <= r1 + slack) {
    geom.mode = IntersectionGeometry::Mode::UseBall2;
    return geom;
  }
  if (phi > r1 + r2 + 1e-9 * std::max(1.0, r1 + r2))
    throw NumericalInconsistency("BT1 and BT2 balls are disjoint (|phi| = " + std::to_string(phi) +
                                 ", r1 + r2 = " + std::to_string(r1 + r2) + ")");
  if (r1 == 0.0 || r2 == 0.0) {
    // Externally tangent within roundoff: the intersection is the point ball.
    geom.mode = r1 == 0.0 ? IntersectionGeometry::Mode::UseBall1 : IntersectionGeometry::Mode::UseBall2;
    return geom;
  }

  geom.mode = IntersectionGeometry::Mode::Lens;
  geom.zeta = (phi_sq + r2 * r2 - r1 * r1) / (2.0 * phi);
  geom.kappa = std::sqrt(std::max(0.0, r2 * r2 - geom.zeta * geom.zeta));
  geom.psi_dot.resize(n);
  const double along = geom.zeta / phi;
  for (std::size_t i = 0; i < n; ++i)
    geom.psi_dot[i] = ball2.center_dot[i] + along * geom.phi_dot[i];
  return geom;
}

BoundPair intersection_bounds(const Ball& ball1, const Ball& ball2, std::size_t i,
                              const KernelOracle& oracle, const IntersectionGeometry& geom) {
  const double qii = oracle.q_diag(i);
  if (qii <= 0.0) return {0.0, 0.0};
  switch (geom.mode) {
    case IntersectionGeometry::Mode::UseBall1: return ball_bounds(ball1, i, oracle);
    case IntersectionGeometry::Mode::UseBall2: return ball_bounds(ball2, i, oracle);
    case IntersectionGeometry::Mode::Lens: break;
  }

  const double z_norm = std::sqrt(qii);
  const double phi = geom.phi_norm;
  const double cosine = geom.phi_dot[i] / (z_norm * phi);  // z_i^T phi / (|z_i| |phi|)
  const double ball1_edge = (geom.zeta - phi) / geom.r1;
  const double ball2_edge = geom.zeta / geom.r2;
  const double rim = geom.kappa *
      std::sqrt(std::max(0.0, qii - geom.phi_dot[i] * geom.phi_dot[i] / (phi * phi)));

  BoundPair bounds;
  if (-cosine < ball1_edge) {
    bounds.lower = ball_bounds(ball1, i, oracle).lower;
  } else if (ball2_edge < -cosine) {
    bounds.lower = ball_bounds(ball2, i, oracle).lower;
  } else {
    bounds.lower = geom.psi_dot[i] - rim;
  }
  if (cosine < ball1_edge) {
    bounds.upper = ball_bounds(ball1, i, oracle).upper;
  } else if (ball2_edge < cosine) {
    bounds.upper = ball_bounds(ball2, i, oracle).upper;
  } else {
    bounds.upper = geom.psi_dot[i] + rim;
  }
  return bounds;
}

BoundPair dome_bounds(const ReferenceSolution& ref_a, double gamma_b, double C, std::size_t i,
                      const KernelOracle& oracle) {
  if (!(C >= ref_a.C)) throw std::invalid_argument("dome test requires C >= C_a");
  const double gamma_a = ref_a.norm_sq;
  if (gamma_b < gamma_a - 1e-9 * std::max(1.0, gamma_a))
    throw std::invalid_argument("dome test requires ||w_b||^2 >= ||w_a||^2");
  gamma_b = std::max(gamma_b, gamma_a);

  const double qii = oracle.q_diag(i);
  if (qii <= 0.0 || gamma_b <= 0.0) return {0.0, 0.0};
  const double z_norm = std::sqrt(qii);
  const double za = ref_a.margins[i];  // z_i^T w_a
  const double sphere = std::sqrt(gamma_b) * z_norm;
  const double edge = gamma_a / std::sqrt(gamma_b);

  // Extremes on the rim {||w||^2 = gamma_b, w_a^T w = gamma_a}.
  double rim = 0.0;
  if (gamma_a > 0.0)
    rim = std::sqrt(std::max(0.0, (gamma_b - gamma_a) / gamma_a * (gamma_a * qii - za * za)));

  BoundPair bounds;
  bounds.lower = -za / z_norm >= edge ? -sphere : za - rim;
  bounds.upper = za / z_norm >= edge ? sphere : za + rim;
  return bounds;
}

double bt1_dual_form(const ReferenceSolution& ref, double C, std::size_t i,
                     const KernelOracle& oracle) {
  require_not_below_reference(ref, C);
  return (C + ref.C) / (2.0 * ref.C) * ref.margins[i] -
         (C - ref.C) / (2.0 * ref.C) * std::sqrt(ref.norm_sq * oracle.q_diag(i));
}

ScreeningReport screen(const ReferenceSolution& ref, double C, ScreeningTest test,
                       const KernelOracle& oracle, const ScreenOptions& options) {
  const std::size_t n = oracle.size();
  if (ref.size() != n) throw std::invalid_argument("reference length mismatch");
  require_not_below_reference(ref, C);

  ScreeningReport report;
  report.test = test;
  report.C = C;
  report.C_ref = ref.C;
  report.statuses.assign(n, SampleStatus::Unknown);
  report.bounds.resize(n);

  Ball ball1, ball2;
  IntersectionGeometry geom;
  if (test == ScreeningTest::BT1 || test == ScreeningTest::IT) ball1 = ball_bt1(ref, C);
  if (test == ScreeningTest::BT2 || test == ScreeningTest::IT) {
    if (options.selection != nullptr) {
      if (options.selection->s_hat != select_s_hat(ref, C))
        throw std::invalid_argument("cached selection does not match the reference");
      ball2 = ball_bt2(ref, *options.selection, C);
    } else {
      ball2 = ball_bt2(ref, select_s_hat(ref, C), C, oracle);
    }
  }
  if (test == ScreeningTest::IT) geom = intersection_geometry(ball1, ball2);
  if (test == ScreeningTest::DT && !options.dome_gamma_b)
    throw std::invalid_argument("dome test needs ||w*||^2 at C_b");

  parallel_for(n, options.threads, [&](std::size_t i) {
    BoundPair b;
    switch (test) {
      case ScreeningTest::BT1: b = ball_bounds(ball1, i, oracle); break;
      case ScreeningTest::BT2: b = ball_bounds(ball2, i, oracle); break;
      case ScreeningTest::IT: b = intersection_bounds(ball1, ball2, i, oracle, geom); break;
      case ScreeningTest::DT: b = dome_bounds(ref, *options.dome_gamma_b, C, i, oracle); break;
    }
    report.bounds[i] = b;
    if (b.lower > 1.0 + options.slack) {
      report.statuses[i] = SampleStatus::ScreenedR;
    } else if (b.upper < 1.0 - options.slack) {
      report.statuses[i] = SampleStatus::ScreenedL;
    }
  });

  for (SampleStatus s : report.statuses) {
    if (s == SampleStatus::ScreenedR) ++report.screened_R;
    if (s == SampleStatus::ScreenedL) ++report.screened_L;
  }
  report.rate_all = static_cast<double>(report.screened_R + report.screened_L) /
                    static_cast<double>(n);
  return report;
}

void attach_exact_partition(ScreeningReport& report, const KktPartition& exact) {
  const std::size_t non_sv = exact.R.size() + exact.L.size();
  if (non_sv == 0) {
    report.rate_nonsv = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  std::size_t hits = 0;
  for (std::size_t i : exact.R) hits += report.statuses[i] == SampleStatus::ScreenedR;
  for (std::size_t i : exact.L) hits += report.statuses[i] == SampleStatus::ScreenedL;
  report.rate_nonsv = static_cast<double>(hits) / static_cast<double>(non_sv);
}

std::size_t count_violations(const ScreeningReport& report, const DualSolution& exact,
                             double alpha_tol) {
  std::size_t violations = 0;
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (report.statuses[i] == SampleStatus::ScreenedR && exact.alpha[i] > alpha_tol) ++violations;
    if (report.statuses[i] == SampleStatus::ScreenedL && exact.alpha[i] < exact.C - alpha_tol)
      ++violations;
  }
  return violations;
}

ReducedProblem reduce_problem(const ScreeningReport& report, const KernelOracle& oracle) {
  const std::size_t n = oracle.size();
  if (report.size() != n) throw std::invalid_argument("report length mismatch");
  ReducedProblem reduced;
  reduced.C = report.C;
  std::vector<double> fixed_alpha(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    switch (report.statuses[i]) {
      case SampleStatus::ScreenedR: reduced.fixed_R.push_back(i); break;
      case SampleStatus::ScreenedL:
        reduced.fixed_L.push_back(i);
        fixed_alpha[i] = report.C;
        break;
      case SampleStatus::Unknown: reduced.kept.push_back(i); break;
    }
  }
  reduced.d_offsets.assign(reduced.kept.size(), 0.0);
  if (!reduced.fixed_L.empty() && !reduced.kept.empty()) {
    const auto d = oracle.q_matvec(fixed_alpha);
    for (std::size_t k = 0; k < reduced.kept.size(); ++k) reduced.d_offsets[k] = d[reduced.kept[k]];
  }
  return reduced;
}

DualSolution solve_reduced(const ReducedProblem& reduced, const KernelOracle& oracle,
                           const SolverConfig& config, const DualSolution* warm_start) {
  const std::size_t n = oracle.size();
  if (reduced.kept.size() + reduced.fixed_L.size() + reduced.fixed_R.size() != n ||
      reduced.d_offsets.size() != reduced.kept.size())
    throw std::invalid_argument("reduced problem does not partition the samples");

  std::vector<double> alpha(n, 0.0);
  if (warm_start != nullptr) {
    if (warm_start->alpha.size() != n) throw std::invalid_argument("warm start length mismatch");
    alpha = warm_start->alpha;
  }
  for (std::size_t i : reduced.fixed_R) alpha[i] = 0.0;
  for (std::size_t i : reduced.fixed_L) alpha[i] = reduced.C;
  std::vector<double> offset(n, 0.0);
  for (std::size_t k = 0; k < reduced.kept.size(); ++k) offset[reduced.kept[k]] = reduced.d_offsets[k];
  return detail::coordinate_ascent(oracle, reduced.C, reduced.kept, offset, std::move(alpha), config);
}

std::vector<RateRow> rate_sweep(const KernelOracle& oracle, double C,
                                std::span<const double> ratios, const SolverConfig& config,
                                double band, unsigned threads) {
  const DualSolution exact = solve(oracle, C, config);
  const KktPartition partition = kkt_partition(exact, band);

  std::vector<RateRow> rows;
  std::optional<DualSolution> previous;
  for (double ratio : ratios) {
    if (!(ratio > 0.0 && ratio <= 1.0))
      throw std::invalid_argument("C_ref / C ratios must lie in (0, 1]");
    DualSolution at_ref = solve(oracle, ratio * C, config, previous ? &*previous : nullptr);
    const ReferenceSolution ref = make_reference(at_ref, oracle);
    RateRow row;
    row.ratio = ratio;
    ScreenOptions options;
    options.threads = threads;
    for (ScreeningTest test : {ScreeningTest::BT1, ScreeningTest::BT2, ScreeningTest::IT}) {
      ScreeningReport report = screen(ref, C, test, oracle, options);
      attach_exact_partition(report, partition);
      const double rate = *report.rate_nonsv;
      if (test == ScreeningTest::BT1) row.bt1 = rate;
      if (test == ScreeningTest::BT2) row.bt2 = rate;
      if (test == ScreeningTest::IT) row.it = rate;
    }
    rows.push_back(row);
    previous = std::move(at_ref);
  }
  return rows;
}

}  // namespace safescreen
