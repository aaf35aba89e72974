#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "safescreen/dataset.hpp"

namespace safescreen {

struct Kernel {
  enum class Type { Linear, Rbf };

  Type type = Type::Linear;
  double gamma = 0.0;  // RBF only

  static Kernel linear() { return {Type::Linear, 0.0}; }
  /// Throws std::invalid_argument unless gamma > 0.
  static Kernel rbf(double gamma);

  double operator()(const Sample& a, const Sample& b) const;

  std::string name() const { return type == Type::Linear ? "linear" : "rbf"; }
};

double sparse_dot(std::span<const Feature> a, std::span<const Feature> b);
double sparse_squared_distance(std::span<const Feature> a, std::span<const Feature> b);

/// The only gateway to Q_ij = y_i y_j K(x_i, x_j).
///
/// Rows are cached on demand (optionally LRU-capped); the diagonal is
/// precomputed. All member functions are safe to call concurrently and
/// return the same values as the uncached formula.
class KernelOracle {
 public:
  using Row = std::shared_ptr<const std::vector<double>>;

  /// `data` must outlive the oracle. `max_cached_rows` of 0 means unbounded.
  KernelOracle(const Dataset& data, Kernel kernel, std::size_t max_cached_rows = 0);

  KernelOracle(const KernelOracle&) = delete;
  KernelOracle& operator=(const KernelOracle&) = delete;

  std::size_t size() const noexcept { return data_->size(); }
  const Dataset& data() const noexcept { return *data_; }
  const Kernel& kernel() const noexcept { return kernel_; }

  double q_entry(std::size_t i, std::size_t j) const;
  double q_diag(std::size_t i) const { return diag_.at(i); }
  std::span<const double> diagonal() const noexcept { return diag_; }

  Row q_row(std::size_t i) const;

  /// (Q beta)_i; zero entries of beta are skipped.
  std::vector<double> q_matvec(std::span<const double> beta) const;

  /// w = sum_j beta_j y_j x_j as a dense vector. Linear kernel only.
  std::vector<double> primal_weights(std::span<const double> beta) const;

  /// y_i <w, x_i> for a dense weight vector. Linear kernel only.
  double linear_margin(std::span<const double> w, std::size_t i) const;

  std::size_t cached_rows() const;

 private:
  double compute_entry(std::size_t i, std::size_t j) const;
  void check_index(std::size_t i) const;

  const Dataset* data_;
  Kernel kernel_;
  std::size_t max_cached_rows_;
  std::vector<double> diag_;

  mutable std::mutex mutex_;
  mutable std::list<std::size_t> lru_;  // front = most recent
  struct CacheEntry {
    Row row;
    std::list<std::size_t>::iterator position;
  };
  mutable std::unordered_map<std::size_t, CacheEntry> cache_;
};

}  // namespace safescreen
