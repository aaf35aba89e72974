#include "safescreen/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "safescreen/errors.hpp"

namespace safescreen {

namespace {

// Projected-gradient magnitude for one coordinate of the box QP.
double coordinate_violation(double alpha, double C, double gradient) {
  if (alpha <= 0.0) return std::max(0.0, gradient);
  if (alpha >= C) return std::max(0.0, -gradient);
  return std::abs(gradient);
}

// Margins of the active coordinates, either through an explicit primal
// vector (linear kernel) or a dense margin vector updated with Q rows.
class MarginTracker {
 public:
  MarginTracker(const KernelOracle& oracle, std::span<const std::size_t> active,
                std::span<const double> offset)
      : oracle_(&oracle),
        active_(active),
        offset_(offset),
        linear_(oracle.kernel().type == Kernel::Type::Linear) {}

  void rebuild(std::span<const double> alpha) {
    std::vector<double> masked(oracle_->size(), 0.0);
    for (std::size_t i : active_) masked[i] = alpha[i];
    if (linear_) {
      w_ = oracle_->primal_weights(masked);
    } else {
      margin_ = oracle_->q_matvec(masked);
      for (std::size_t i : active_) margin_[i] += offset_[i];
    }
  }

  double margin(std::size_t i) const {
    return linear_ ? offset_[i] + oracle_->linear_margin(w_, i) : margin_[i];
  }

  void update(std::size_t i, double delta) {
    if (linear_) {
      const double scale = delta * oracle_->data().label(i);
      for (const Feature& f : oracle_->data()[i].features) w_[f.index] += scale * f.value;
    } else {
      const auto row = oracle_->q_row(i);
      for (std::size_t j : active_) margin_[j] += delta * (*row)[j];
    }
  }

 private:
  const KernelOracle* oracle_;
  std::span<const std::size_t> active_;
  std::span<const double> offset_;
  bool linear_;
  std::vector<double> w_;
  std::vector<double> margin_;
};

constexpr std::size_t kFaceInterval = 8;
constexpr std::size_t kFaceMaxSize = 128;

// Exact ascent on the face of the box where the free coordinates live.
// Along directions in the null space of Q_FF the objective is linear, so we
// move until a coordinate reaches a bound; otherwise a pseudo-inverse Newton
// step, truncated at the box. Coordinate ascent zigzags for a very long time
// on such rank-deficient blocks. Every move here raises the dual objective.
void face_ascent(const KernelOracle& oracle, double C, std::span<const std::size_t> active,
                 std::vector<double>& alpha, MarginTracker& tracker, double tol) {
  std::vector<std::size_t> face;
  for (std::size_t i : active)
    if (alpha[i] > 0.0 && alpha[i] < C) face.push_back(i);
  if (face.empty() || face.size() > kFaceMaxSize) return;

  for (std::size_t round = 0; round < kFaceMaxSize && !face.empty(); ++round) {
    const auto f = static_cast<Eigen::Index>(face.size());
    Eigen::MatrixXd q(f, f);
    Eigen::VectorXd g(f);
    for (Eigen::Index a = 0; a < f; ++a) {
      g(a) = 1.0 - tracker.margin(face[a]);
      for (Eigen::Index b = 0; b <= a; ++b) q(a, b) = q(b, a) = oracle.q_entry(face[a], face[b]);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
    if (eig.info() != Eigen::Success) return;
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double cutoff = 1e-12 * static_cast<double>(f) * std::max(1.0, lambda(f - 1));
    const Eigen::VectorXd coeff = eig.eigenvectors().transpose() * g;
    Eigen::VectorXd null_part = Eigen::VectorXd::Zero(f);
    Eigen::VectorXd newton = Eigen::VectorXd::Zero(f);
    for (Eigen::Index k = 0; k < f; ++k) {
      if (lambda(k) > cutoff) {
        newton += (coeff(k) / lambda(k)) * eig.eigenvectors().col(k);
      } else {
        null_part += coeff(k) * eig.eigenvectors().col(k);
      }
    }
    const bool along_null = null_part.lpNorm<Eigen::Infinity>() > 0.1 * tol;
    const Eigen::VectorXd& p = along_null ? null_part : newton;

    double t = along_null ? std::numeric_limits<double>::infinity() : 1.0;
    for (Eigen::Index a = 0; a < f; ++a) {
      if (p(a) > 0.0) t = std::min(t, (C - alpha[face[a]]) / p(a));
      if (p(a) < 0.0) t = std::min(t, -alpha[face[a]] / p(a));
    }
    if (!std::isfinite(t) || !(t > 0.0)) return;

    std::vector<std::size_t> still_free;
    for (Eigen::Index a = 0; a < f; ++a) {
      const std::size_t i = face[a];
      double next = std::clamp(alpha[i] + t * p(a), 0.0, C);
      // Snap the coordinate(s) that limited the step exactly onto the bound.
      if (p(a) > 0.0 && (C - alpha[i]) / p(a) <= t) next = C;
      if (p(a) < 0.0 && -alpha[i] / p(a) <= t) next = 0.0;
      if (next != alpha[i]) tracker.update(i, next - alpha[i]);
      alpha[i] = next;
      if (next > 0.0 && next < C) still_free.push_back(i);
    }
    if (!along_null && still_free.size() == face.size()) return;
    face.swap(still_free);
  }
}

}  // namespace

void refresh_margins(const KernelOracle& oracle, DualSolution& solution) {
  solution.margins = oracle.q_matvec(solution.alpha);
}

double dual_objective(const KernelOracle& oracle, const DualSolution& solution) {
  std::vector<double> scratch;
  std::span<const double> margins = solution.margins;
  if (!solution.fresh()) {
    scratch = oracle.q_matvec(solution.alpha);
    margins = scratch;
  }
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < solution.alpha.size(); ++i) {
    linear += solution.alpha[i];
    quad += solution.alpha[i] * margins[i];
  }
  return linear - 0.5 * quad;
}

ObjectiveReport primal_objective(const KernelOracle& oracle, const DualSolution& solution) {
  std::vector<double> scratch;
  std::span<const double> margins = solution.margins;
  if (!solution.fresh()) {
    scratch = oracle.q_matvec(solution.alpha);
    margins = scratch;
  }
  double linear = 0.0, quad = 0.0, xi = 0.0;
  for (std::size_t i = 0; i < solution.alpha.size(); ++i) {
    linear += solution.alpha[i];
    quad += solution.alpha[i] * margins[i];
    xi += std::max(0.0, 1.0 - margins[i]);
  }
  ObjectiveReport report;
  report.dual_value = linear - 0.5 * quad;
  report.primal_value = 0.5 * quad + solution.C * xi;
  report.gap = report.primal_value - report.dual_value;
  report.xi = xi;
  return report;
}

double max_kkt_violation(const DualSolution& solution) {
  if (!solution.fresh()) throw std::invalid_argument("max_kkt_violation: stale margins");
  double worst = 0.0;
  for (std::size_t i = 0; i < solution.alpha.size(); ++i)
    worst = std::max(worst, coordinate_violation(solution.alpha[i], solution.C,
                                                 1.0 - solution.margins[i]));
  return worst;
}

KktPartition kkt_partition(const DualSolution& solution, double band) {
  if (!solution.fresh()) throw std::invalid_argument("kkt_partition: stale margins");
  KktPartition p;
  for (std::size_t i = 0; i < solution.margins.size(); ++i) {
    const double m = solution.margins[i];
    if (m > 1.0 + band) {
      p.R.push_back(i);
    } else if (m < 1.0 - band) {
      p.L.push_back(i);
    } else {
      p.E.push_back(i);
    }
  }
  return p;
}

namespace detail {

DualSolution coordinate_ascent(const KernelOracle& oracle, double C,
                               std::span<const std::size_t> active,
                               std::span<const double> offset, std::vector<double> alpha,
                               const SolverConfig& config) {
  if (!(C > 0.0) || !std::isfinite(C)) throw std::invalid_argument("C must be positive");
  if (!(config.kkt_tolerance > 0.0)) throw std::invalid_argument("kkt_tolerance must be positive");
  const std::size_t n = oracle.size();
  if (alpha.size() != n || offset.size() != n)
    throw std::invalid_argument("coordinate_ascent: length mismatch");
  for (std::size_t i : active) alpha[i] = std::clamp(alpha[i], 0.0, C);

  const double tol = config.kkt_tolerance;
  const double shrink_threshold = 10.0 * tol;
  std::mt19937_64 rng(config.shuffle_seed);
  MarginTracker tracker(oracle, active, offset);
  tracker.rebuild(alpha);

  std::vector<std::size_t> working(active.begin(), active.end());
  bool shrunk = false;
  double worst = 0.0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(working.begin(), working.end(), rng);
    worst = 0.0;
    std::vector<std::size_t> keep;
    if (config.active_set_shrinking) keep.reserve(working.size());

    for (std::size_t i : working) {
      const double gradient = 1.0 - tracker.margin(i);
      worst = std::max(worst, coordinate_violation(alpha[i], C, gradient));
      const double qii = oracle.q_diag(i);
      const double next = qii > 0.0 ? std::clamp(alpha[i] + gradient / qii, 0.0, C) : C;
      const double delta = next - alpha[i];
      if (delta != 0.0) {
        alpha[i] = next;
        tracker.update(i, delta);
      }
      if (config.active_set_shrinking) {
        const bool frozen = (alpha[i] <= 0.0 && gradient < -shrink_threshold) ||
                            (alpha[i] >= C && gradient > shrink_threshold);
        if (frozen) {
          shrunk = true;
        } else {
          keep.push_back(i);
        }
      }
    }
    if (config.active_set_shrinking) working.swap(keep);

    if (worst > tol) {
      if ((epoch + 1) % kFaceInterval == 0) face_ascent(oracle, C, active, alpha, tracker, tol);
      continue;
    }

    // Candidate optimum: drop accumulated roundoff and check every active
    // coordinate, including frozen ones.
    tracker.rebuild(alpha);
    double verified = 0.0;
    for (std::size_t i : active)
      verified = std::max(verified, coordinate_violation(alpha[i], C, 1.0 - tracker.margin(i)));
    if (verified <= tol) {
      // Re-check against Q alpha over the full vector, which is what callers
      // see; differs from the tracker only by roundoff on reduced problems.
      DualSolution solution{C, alpha, {}};
      refresh_margins(oracle, solution);
      double full = 0.0;
      for (std::size_t i : active)
        full = std::max(full, coordinate_violation(alpha[i], C, 1.0 - solution.margins[i]));
      if (full <= tol) return solution;
      verified = full;
    }
    worst = verified;
    if (shrunk) {
      working.assign(active.begin(), active.end());
      shrunk = false;
    }
  }
  throw ConvergenceError("dual coordinate ascent did not converge in " +
                             std::to_string(config.max_epochs) +
                             " epochs (worst KKT violation " + std::to_string(worst) + ")",
                         worst);
}

}  // namespace detail

DualSolution solve(const KernelOracle& oracle, double C, const SolverConfig& config,
                   const DualSolution* warm_start) {
  const std::size_t n = oracle.size();
  std::vector<double> alpha(n, 0.0);
  if (warm_start != nullptr) {
    if (warm_start->alpha.size() != n) throw std::invalid_argument("warm start length mismatch");
    alpha = warm_start->alpha;
  }
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});
  const std::vector<double> offset(n, 0.0);
  return detail::coordinate_ascent(oracle, C, active, offset, std::move(alpha), config);
}

}  // namespace safescreen
