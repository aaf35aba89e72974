#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "safescreen/dataset.hpp"
#include "safescreen/kernel.hpp"
#include "safescreen/screening.hpp"
#include "safescreen/solver.hpp"

namespace support {

using namespace safescreen;

// Gaussian features, labels from a random hyperplane with noise and a few
// flips so that every instance has samples on both sides of the margin.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d,
                              double flip = 0.15) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = normal(rng);
  std::vector<Sample> samples(n);
  for (Sample& s : samples) {
    double score = 0.3 * normal(rng);
    for (std::size_t k = 0; k < d; ++k) {
      const double x = normal(rng);
      s.features.push_back({k, x});
      score += x * v[k];
    }
    s.label = score >= 0.0 ? 1 : -1;
    if (unit(rng) < flip) s.label = -s.label;
  }
  return Dataset(std::move(samples), d);
}

// Linear, then RBF with gamma in {0.1, 1, 10} / d.
inline Kernel kernel_variant(int variant, std::size_t d) {
  static const double factors[] = {0.1, 1.0, 10.0};
  if (variant % 4 == 0) return Kernel::linear();
  return Kernel::rbf(factors[variant % 4 - 1] / static_cast<double>(d));
}

inline Eigen::MatrixXd dense_q(const KernelOracle& oracle) {
  const auto n = static_cast<Eigen::Index>(oracle.size());
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      q(i, j) = oracle.q_entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return q;
}

inline Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// (a - b)^T Q (a - b): squared feature-space distance between sum a_i z_i and
// sum b_i z_i.
inline double q_distance_sq(const Eigen::MatrixXd& q, const std::vector<double>& a,
                            const std::vector<double>& b) {
  const Eigen::VectorXd diff = as_vector(a) - as_vector(b);
  return diff.dot(q * diff);
}

inline SolverConfig tight_config(double tol = 1e-10) {
  SolverConfig config;
  config.kkt_tolerance = tol;
  config.max_epochs = 200000;
  return config;
}

inline DualSolution exact_solve(const KernelOracle& oracle, double C, double tol = 1e-10,
                                const DualSolution* warm = nullptr) {
  return solve(oracle, C, tight_config(tol), warm);
}

// Projected gradient ascent with step 1/||Q||_2 on the box QP.
inline Eigen::VectorXd projected_gradient(const Eigen::MatrixXd& q, double C, int iterations) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
  const double lipschitz = std::max(1e-12, eig.eigenvalues().maxCoeff());
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(q.rows());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(q.rows());
  for (int it = 0; it < iterations; ++it) {
    alpha += (ones - q * alpha) / lipschitz;
    alpha = alpha.cwiseMax(0.0).cwiseMin(C);
  }
  return alpha;
}

inline double dual_value(const Eigen::MatrixXd& q, const Eigen::VectorXd& alpha) {
  return alpha.sum() - 0.5 * alpha.dot(q * alpha);
}

// A dataset whose first `dim` samples are the unit vectors (label +1), so a
// ball center m in R^dim is simply beta = m on those samples. The last
// sample is the query vector z.
struct Explicit {
  Dataset data;
  std::unique_ptr<KernelOracle> oracle;
  std::size_t query;
};

inline Explicit explicit_space(const std::vector<double>& z, int label) {
  std::vector<Sample> samples;
  for (std::size_t k = 0; k < z.size(); ++k) samples.push_back(Sample{{{k, 1.0}}, 1});
  Sample q;
  for (std::size_t k = 0; k < z.size(); ++k) q.features.push_back({k, z[k]});
  q.label = label;
  samples.push_back(q);
  Explicit e{Dataset(std::move(samples), z.size()), nullptr, z.size()};
  e.oracle = std::make_unique<KernelOracle>(e.data, Kernel::linear());
  return e;
}

inline Ball explicit_ball(const KernelOracle& oracle, const std::vector<double>& center, double radius) {
  Ball b;
  b.beta.assign(oracle.size(), 0.0);
  for (std::size_t k = 0; k < center.size(); ++k) b.beta[k] = center[k];
  b.radius = radius;
  b.center_dot = oracle.q_matvec(b.beta);
  b.center_norm_sq = 0.0;
  for (double c : center) b.center_norm_sq += c * c;
  return b;
}

inline std::vector<double> random_point_in_ball(std::mt19937_64& rng,
                                                const std::vector<double>& center, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> p(center.size());
  double norm = 0.0;
  for (double& x : p) {
    x = normal(rng);
    norm += x * x;
  }
  const double scale =
      radius * std::pow(unit(rng), 1.0 / static_cast<double>(center.size())) / std::sqrt(norm);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = center[k] + scale * p[k];
  return p;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace support
