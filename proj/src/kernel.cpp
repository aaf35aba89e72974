#include "safescreen/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace safescreen {

Kernel Kernel::rbf(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("RBF gamma must be positive and finite");
  return {Type::Rbf, gamma};
}

double sparse_dot(std::span<const Feature> a, std::span<const Feature> b) {
  double sum = 0.0;
  std::size_t p = 0, q = 0;
  while (p < a.size() && q < b.size()) {
    if (a[p].index == b[q].index) {
      sum += a[p].value * b[q].value;
      ++p;
      ++q;
    } else if (a[p].index < b[q].index) {
      ++p;
    } else {
      ++q;
    }
  }
  return sum;
}

double sparse_squared_distance(std::span<const Feature> a, std::span<const Feature> b) {
  double sum = 0.0;
  std::size_t p = 0, q = 0;
  while (p < a.size() || q < b.size()) {
    double diff;
    if (q == b.size() || (p < a.size() && a[p].index < b[q].index)) {
      diff = a[p++].value;
    } else if (p == a.size() || b[q].index < a[p].index) {
      diff = b[q++].value;
    } else {
      diff = a[p++].value - b[q++].value;
    }
    sum += diff * diff;
  }
  return sum;
}

double Kernel::operator()(const Sample& a, const Sample& b) const {
  if (type == Type::Linear) return sparse_dot(a.features, b.features);
  if (&a == &b) return 1.0;
  return std::exp(-gamma * sparse_squared_distance(a.features, b.features));
}

KernelOracle::KernelOracle(const Dataset& data, Kernel kernel, std::size_t max_cached_rows)
    : data_(&data), kernel_(kernel), max_cached_rows_(max_cached_rows) {
  if (kernel_.type == Kernel::Type::Rbf) kernel_ = Kernel::rbf(kernel_.gamma);
  diag_.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) diag_[i] = compute_entry(i, i);
}

void KernelOracle::check_index(std::size_t i) const {
  if (i >= size())
    throw std::out_of_range("sample index " + std::to_string(i) + " out of range (n = " +
                            std::to_string(size()) + ")");
}

double KernelOracle::compute_entry(std::size_t i, std::size_t j) const {
  const Sample& a = (*data_)[i];
  const Sample& b = (*data_)[j];
  if (i == j && kernel_.type == Kernel::Type::Rbf) return 1.0;
  return static_cast<double>(a.label * b.label) * kernel_(a, b);
}

double KernelOracle::q_entry(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  if (i == j) return diag_[i];
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(i); it != cache_.end()) return (*it->second.row)[j];
    if (auto it = cache_.find(j); it != cache_.end()) return (*it->second.row)[i];
  }
  return compute_entry(i, j);
}

KernelOracle::Row KernelOracle::q_row(std::size_t i) const {
  check_index(i);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(i); it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.position);
      return it->second.row;
    }
  }

  auto row = std::make_shared<std::vector<double>>(size());
  for (std::size_t j = 0; j < size(); ++j) (*row)[j] = i == j ? diag_[i] : compute_entry(i, j);

  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(i); it != cache_.end()) return it->second.row;
  lru_.push_front(i);
  cache_.emplace(i, CacheEntry{row, lru_.begin()});
  if (max_cached_rows_ > 0 && cache_.size() > max_cached_rows_) {
    cache_.erase(lru_.back());
    lru_.pop_back();
  }
  return row;
}

std::vector<double> KernelOracle::primal_weights(std::span<const double> beta) const {
  if (kernel_.type != Kernel::Type::Linear)
    throw std::logic_error("primal weights exist only for the linear kernel");
  if (beta.size() != size()) throw std::invalid_argument("coefficient vector length mismatch");
  std::vector<double> w(data_->dim(), 0.0);
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (beta[j] == 0.0) continue;
    const double scale = beta[j] * data_->label(j);
    for (const Feature& f : (*data_)[j].features) w[f.index] += scale * f.value;
  }
  return w;
}

double KernelOracle::linear_margin(std::span<const double> w, std::size_t i) const {
  double sum = 0.0;
  for (const Feature& f : (*data_)[i].features) sum += w[f.index] * f.value;
  return data_->label(i) * sum;
}

std::vector<double> KernelOracle::q_matvec(std::span<const double> beta) const {
  if (beta.size() != size()) throw std::invalid_argument("q_matvec: length mismatch");
  std::vector<double> out(size(), 0.0);
  if (kernel_.type == Kernel::Type::Linear) {
    const auto w = primal_weights(beta);
    for (std::size_t i = 0; i < size(); ++i) out[i] = linear_margin(w, i);
    return out;
  }
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (beta[j] == 0.0) continue;
    const auto row = q_row(j);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += beta[j] * (*row)[i];
  }
  return out;
}

std::size_t KernelOracle::cached_rows() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace safescreen
