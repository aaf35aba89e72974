// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "json.hpp"
#include "safescreen/io.hpp"
#include "safescreen/path.hpp"
#include "support.hpp"

using namespace safescreen;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

struct Instance {
  Dataset data;
  std::unique_ptr<KernelOracle> oracle;
};

// n in [10, 80], d in [2, 6]; kernels cycle through linear and the three
// RBF widths independently of the C multiplier.
Instance random_instance(std::mt19937_64& rng, int trial) {
  std::uniform_int_distribution<std::size_t> n_dist(10, 80), d_dist(2, 6);
  const std::size_t n = n_dist(rng), d = d_dist(rng);
  Instance inst{support::random_dataset(rng, n, d), nullptr};
  inst.oracle = std::make_unique<KernelOracle>(inst.data, support::kernel_variant(trial, d));
  return inst;
}

double c_multiplier(int trial) {
  static const double m[] = {2.0, 10.0, 100.0};
  return m[trial % 3];
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "safescreen");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

void criteria_1_to_4() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  const double ratios[] = {0.3, 0.5, 0.7, 0.9, 0.99};
  std::size_t violations = 0, screened = 0, checks = 0;
  std::size_t dominance_failures = 0, containment_failures = 0, identity_failures = 0;
  double worst_dominance = 0.0, worst_containment = 0.0, worst_identity = 0.0;
  bool solver_failed = false;

  for (int trial = 0; trial < 200; ++trial) {
    Instance inst = random_instance(rng, trial);
    const KernelOracle& oracle = *inst.oracle;
    const Eigen::MatrixXd q = support::dense_q(oracle);
    const double C = c_multiplier(trial) * c_min(oracle);
    try {
      const DualSolution exact = support::exact_solve(oracle, C);
      const DualSolution upper = support::exact_solve(oracle, 1.3 * C, 1e-10, &exact);
      const double gamma_b = make_reference(upper, oracle).norm_sq;
      DualSolution previous{};
      for (double ratio : ratios) {
        const DualSolution ref_solution = support::exact_solve(
            oracle, ratio * C, 1e-10, previous.alpha.empty() ? nullptr : &previous);
        previous = ref_solution;
        const ReferenceSolution ref = make_reference(ref_solution, oracle);

        ScreenOptions dome;
        dome.dome_gamma_b = gamma_b;
        const ScreeningReport bt1 = screen(ref, C, ScreeningTest::BT1, oracle);
        const ScreeningReport bt2 = screen(ref, C, ScreeningTest::BT2, oracle);
        const ScreeningReport it = screen(ref, C, ScreeningTest::IT, oracle);
        const ScreeningReport dt = screen(ref, C, ScreeningTest::DT, oracle, dome);
        for (const ScreeningReport* r : {&bt1, &bt2, &it, &dt}) {
          violations += count_violations(*r, exact, 1e-7);
          screened += r->screened_R + r->screened_L;
        }

        for (std::size_t i = 0; i < oracle.size(); ++i) {
          const double lo = std::max(bt1.bounds[i].lower, bt2.bounds[i].lower) - it.bounds[i].lower;
          const double hi = it.bounds[i].upper - std::min(bt1.bounds[i].upper, bt2.bounds[i].upper);
          worst_dominance = std::max({worst_dominance, lo, hi});
          if (lo > 1e-9 || hi > 1e-9) ++dominance_failures;
          if ((bt1.statuses[i] != SampleStatus::Unknown || bt2.statuses[i] != SampleStatus::Unknown) &&
              it.statuses[i] == SampleStatus::Unknown)
            ++dominance_failures;

          const double identity =
              std::abs(bt1_dual_form(ref, C, i, oracle) - bt1.bounds[i].lower);
          worst_identity = std::max(worst_identity, identity);
          if (identity > 1e-10) ++identity_failures;
        }

        const Ball b1 = ball_bt1(ref, C);
        const Ball b2 = ball_bt2(ref, select_s_hat(ref, C), C, oracle);
        for (const Ball* b : {&b1, &b2}) {
          const double excess =
              std::sqrt(std::max(0.0, support::q_distance_sq(q, exact.alpha, b->beta))) - b->radius;
          worst_containment = std::max(worst_containment, excess);
          if (excess > 1e-8) ++containment_failures;
        }
        ++checks;
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "instance %d: %s\n", trial, e.what());
      solver_failed = true;
    }
  }
  const double elapsed = seconds_since(start);
  report(1, !solver_failed && violations == 0 && elapsed < 120.0,
         "safety: " + std::to_string(violations) + " violations over " + std::to_string(checks) +
             " (instance, ratio) pairs x 4 tests, " + std::to_string(screened) +
             " screened decisions" + fmt(", %.1f s", elapsed));
  report(2, !solver_failed && dominance_failures == 0,
         "dominance: " + std::to_string(dominance_failures) + " failures" +
             fmt(", worst excess %.3g", worst_dominance));
  report(3, !solver_failed && containment_failures == 0,
         "containment: " + std::to_string(containment_failures) + " failures" +
             fmt(", worst excess %.3g", worst_containment));
  report(4, !solver_failed && identity_failures == 0,
         "dual-form identity: " + std::to_string(identity_failures) + " failures" +
             fmt(", worst difference %.3g", worst_identity));
}

void criterion_5(const fs::path& dir) {
  const auto start = Clock::now();
  const std::string toy = (dir / "toy.txt").string();
  std::string out;
  bool ok = run_cli({"gen-toy", "--n", "1000", "--seed", "42", "--out", toy}) == 0 &&
            run_cli({"train", "--data", toy, "--c", "5", "--out", (dir / "m5.json").string()}) == 0 &&
            run_cli({"screen", "--data", toy, "--model", (dir / "m5.json").string(), "--c", "10",
                     "--test", "it", "--out", (dir / "it.json").string()},
                    &out) == 0;
  const double elapsed = seconds_since(start);
  double rate = 0.0;
  if (ok) rate = nlohmann::json::parse(read_file((dir / "it.json").string()))["rate_all"];
  report(5, ok && rate >= 0.70 && elapsed < 10.0,
         fmt("toy IT rate_all %.4f at C=10 from C_ref=5 (need >= 0.70), %.2f s", rate, elapsed));
}

void criterion_6(const fs::path& dir) {
  const std::string toy = (dir / "toy.txt").string();
  const std::string csv = (dir / "rates.csv").string();
  bool ok = run_cli({"rates", "--data", toy, "--c", "10", "--ratios", "0.05:0.05:0.95", "--out",
                     csv}) == 0;
  std::size_t rows = 0, bad = 0;
  double last_ratio = 0.0, it_095 = -1.0;
  if (ok) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      double ratio, bt1, bt2, it;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &ratio, &bt1, &bt2, &it) != 4) {
        ok = false;
        break;
      }
      ++rows;
      if (!(it >= bt1 && it >= bt2)) ++bad;
      last_ratio = ratio;
      if (std::abs(ratio - 0.95) < 1e-9) it_095 = it;
    }
  }
  report(6, ok && rows == 19 && bad == 0 && it_095 >= 0.5,
         std::to_string(rows) + " rows, " + std::to_string(bad) + " rows with it < bt1 or bt2" +
             fmt(", it_rate at ratio %.2f = %.4f (need >= 0.5)", last_ratio, it_095));
}

void criterion_7() {
  std::mt19937_64 rng(1007);
  std::size_t failures7 = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Instance inst = random_instance(rng, trial);
    const double cm = c_min(*inst.oracle);
    for (double f : {0.1, 0.5, 1.0}) {
      DualSolution s{f * cm, std::vector<double>(inst.oracle->size(), f * cm), {}};
      refresh_margins(*inst.oracle, s);
      const double v = max_kkt_violation(s);
      worst = std::max(worst, v);
      if (v > 1e-8) ++failures7;
    }
  }
  report(7, failures7 == 0,
         "alpha = C 1 below C_min: " + std::to_string(failures7) + " KKT failures" +
             fmt(", worst violation %.3g", worst));
}

void criterion_8() {
  std::mt19937_64 rng(1008);
  std::size_t coord_failures = 0, objective_failures = 0, kept_total = 0, n_total = 0;
  double worst_coord = 0.0, worst_objective = 0.0;
  bool solver_failed = false;
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst = random_instance(rng, trial);
    const KernelOracle& oracle = *inst.oracle;
    const double C = c_multiplier(trial) * c_min(oracle);
    try {
      const DualSolution full = support::exact_solve(oracle, C);
      const DualSolution ref_solution = support::exact_solve(oracle, (trial % 2 ? 0.9 : 0.5) * C);
      const ScreeningReport report_it =
          screen(make_reference(ref_solution, oracle), C, ScreeningTest::IT, oracle);
      const ReducedProblem reduced = reduce_problem(report_it, oracle);
      const DualSolution small =
          solve_reduced(reduced, oracle, support::tight_config(), &ref_solution);
      kept_total += reduced.kept.size();
      n_total += oracle.size();
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        const double diff = std::abs(small.alpha[i] - full.alpha[i]);
        worst_coord = std::max(worst_coord, diff);
        if (diff > 1e-6) ++coord_failures;
      }
      const double obj = std::abs(dual_objective(oracle, small) - dual_objective(oracle, full));
      worst_objective = std::max(worst_objective, obj);
      if (obj > 1e-8) ++objective_failures;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "instance %d: %s\n", trial, e.what());
      solver_failed = true;
    }
  }
  report(8, !solver_failed && coord_failures == 0 && objective_failures == 0,
         "reduced vs full: " + std::to_string(coord_failures) + " coordinate and " +
             std::to_string(objective_failures) + " objective failures" +
             fmt(", worst %.3g / %.3g, kept %.1f%% of samples", worst_coord, worst_objective,
                 100.0 * static_cast<double>(kept_total) / static_cast<double>(n_total)));
}

// Checks 5 interior points of every accepted segment against exact solves
// warm-started from the scaled solution. Returns the worst excess over
// epsilon.
struct SegmentCheck {
  std::size_t segments = 0;
  std::size_t failures = 0;
  double worst = 0.0;
};

void check_segments(const KernelOracle& oracle, const PathResult& path, double epsilon,
                    SegmentCheck& check) {
  for (std::size_t k = 1; k < path.steps.size(); ++k) {
    const DualSolution& prev = path.steps[k - 1].solution;
    const double c_prev = path.steps[k - 1].C, c_next = path.steps[k].C;
    ++check.segments;
    for (int s = 1; s <= 5; ++s) {
      const double C = c_prev + (c_next - c_prev) * s / 5.0;
      DualSolution scaled{C, prev.alpha, {}};
      for (double& a : scaled.alpha) a *= C / c_prev;
      const double d_scaled = dual_objective(oracle, scaled);
      const DualSolution exact = support::exact_solve(oracle, C, 1e-10, &scaled);
      const double d_star = dual_objective(oracle, exact);
      const double err = (d_star - d_scaled) / std::abs(d_star);
      check.worst = std::max(check.worst, err);
      if (err > epsilon + 1e-6) ++check.failures;
    }
  }
}

void criterion_9() {
  const double epsilon = 1e-3;
  SegmentCheck check;
  bool ok = true;
  double toy_seconds = 0.0;
  std::size_t toy_steps = 0;
  std::string toy_termination;
  try {
    const Dataset toy = generate_toy(1000, 42);
    const KernelOracle oracle(toy, Kernel::linear());
    PathConfig config;
    config.epsilon = epsilon;
    config.solver.max_epochs = 100000;
    const auto start = Clock::now();
    const PathResult path = run_path(oracle, config);
    toy_seconds = seconds_since(start);
    toy_steps = path.steps.size();
    toy_termination = termination_reason(path.termination);
    ok = ok && path.all_verified() && toy_seconds < 120.0;
    check_segments(oracle, path, epsilon, check);

    std::mt19937_64 rng(1009);
    for (int trial = 0; trial < 10; ++trial) {
      Instance inst = random_instance(rng, trial);
      PathConfig rc;
      rc.epsilon = epsilon;
      rc.c_max = 1e3 * c_min(*inst.oracle);
      rc.solver = support::tight_config(1e-9);
      const PathResult rp = run_path(*inst.oracle, rc);
      ok = ok && rp.all_verified();
      check_segments(*inst.oracle, rp, epsilon, check);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "path: %s\n", e.what());
    ok = false;
  }
  report(9, ok && check.failures == 0,
         "epsilon-path: " + std::to_string(check.failures) + " failures over " +
             std::to_string(check.segments) + " segments x 5 points" +
             fmt(", worst relative dual error %.3g (eps %.0e); toy path %.0f steps in %.2f s",
                 check.worst, epsilon, static_cast<double>(toy_steps), toy_seconds) +
             " (" + toy_termination + ")");
}

void criterion_10() {
  std::mt19937_64 rng(1010);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kSamples = 1000000;
  std::size_t bracket_failures = 0, gap_failures = 0, middle_cases = 0;
  double worst_gap = 0.0;
  bool ok = true;
  for (int config = 0; config < 50; ++config) {
    const std::size_t dim = 2 + config % 2;
    std::vector<double> z(dim), m1(dim), m2(dim), dir(dim);
    double dir_norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      z[k] = normal(rng);
      m1[k] = normal(rng);
      dir[k] = normal(rng);
      dir_norm += dir[k] * dir[k];
    }
    const double r1 = 0.5 + unit(rng), r2 = 0.5 + unit(rng);
    const double lo = std::abs(r1 - r2), hi = r1 + r2;
    const double phi = lo + (0.15 + 0.7 * unit(rng)) * (hi - lo);
    for (std::size_t k = 0; k < dim; ++k) m2[k] = m1[k] - phi * dir[k] / std::sqrt(dir_norm);

    const support::Explicit e = support::explicit_space(z, 1);
    const KernelOracle& oracle = *e.oracle;
    const Ball ball1 = support::explicit_ball(oracle, m1, r1);
    const Ball ball2 = support::explicit_ball(oracle, m2, r2);
    const IntersectionGeometry geom = intersection_geometry(ball1, ball2);
    if (geom.mode != IntersectionGeometry::Mode::Lens) {
      ok = false;
      continue;
    }
    const BoundPair ball_b = ball_bounds(ball1, e.query, oracle);
    const BoundPair lens_b = intersection_bounds(ball1, ball2, e.query, oracle, geom);
    const BoundPair ball2_b = ball_bounds(ball2, e.query, oracle);
    if (lens_b.lower > std::max(ball_b.lower, ball2_b.lower) + 1e-9 ||
        lens_b.upper < std::min(ball_b.upper, ball2_b.upper) - 1e-9)
      ++middle_cases;

    // Sample the smaller ball; the lens is a subset of it.
    const bool first_smaller = r1 <= r2;
    const auto& small_c = first_smaller ? m1 : m2;
    const auto& big_c = first_smaller ? m2 : m1;
    const double small_r = std::min(r1, r2), big_r = std::max(r1, r2);
    double bmin = 1e300, bmax = -1e300, lmin = 1e300, lmax = -1e300;
    for (int s = 0; s < kSamples; ++s) {
      const auto p1 = support::random_point_in_ball(rng, m1, r1);
      const double v1 = support::dot(z, p1);
      bmin = std::min(bmin, v1);
      bmax = std::max(bmax, v1);
      const auto p = support::random_point_in_ball(rng, small_c, small_r);
      if (support::dist(p, big_c) <= big_r) {
        const double v = support::dot(z, p);
        lmin = std::min(lmin, v);
        lmax = std::max(lmax, v);
      }
    }
    const double scale = std::sqrt(support::dot(z, z));
    if (ball_b.lower > bmin + 1e-12 || ball_b.upper < bmax - 1e-12) ++bracket_failures;
    if (lens_b.lower > lmin + 1e-12 || lens_b.upper < lmax - 1e-12) ++bracket_failures;
    const double gaps[] = {(bmin - ball_b.lower) / (r1 * scale), (ball_b.upper - bmax) / (r1 * scale),
                           (lmin - lens_b.lower) / (big_r * scale),
                           (lens_b.upper - lmax) / (big_r * scale)};
    for (double g : gaps) {
      worst_gap = std::max(worst_gap, g);
      if (g > 1e-2) ++gap_failures;
    }
  }
  report(10, ok && bracket_failures == 0 && gap_failures == 0,
         "Monte-Carlo: " + std::to_string(bracket_failures) + " bracket and " +
             std::to_string(gap_failures) + " gap failures over 50 configurations" +
             fmt(", worst relative gap %.3g, %.0f lens-interior cases", worst_gap,
                 static_cast<double>(middle_cases)));
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / ("safescreen_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  criteria_1_to_4();
  criterion_5(dir);
  criterion_6(dir);
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  fs::remove_all(dir);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
