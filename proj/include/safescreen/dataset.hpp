#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace safescreen {

/// One nonzero coordinate. `index` is 0-based; the LIBSVM parser converts
/// from the 1-based file convention.
struct Feature {
  std::size_t index;
  double value;
};

struct Sample {
  std::vector<Feature> features;  // strictly increasing indices
  int label;                      // -1 or +1
};

/// Provenance of a generated dataset. Empty `generator` for parsed data.
struct DatasetMetadata {
  std::string generator;
  std::uint64_t seed = 0;
};

class Dataset {
 public:
  Dataset() = default;

  /// Validates every invariant (labels, index order, finiteness, n >= 1).
  /// `dim` of 0 means "infer from the largest index".
  explicit Dataset(std::vector<Sample> samples, std::size_t dim = 0,
                   DatasetMetadata metadata = {});

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const Sample& at(std::size_t i) const { return samples_.at(i); }
  std::span<const Sample> samples() const noexcept { return samples_; }

  double label(std::size_t i) const { return static_cast<double>(samples_[i].label); }

  const DatasetMetadata& metadata() const noexcept { return metadata_; }

 private:
  std::vector<Sample> samples_;
  std::size_t dim_ = 0;
  DatasetMetadata metadata_;
};

struct ParseOptions {
  /// Accept label "0" as -1.
  bool zero_label_is_negative = false;
};

Dataset parse_libsvm(std::istream& in, const ParseOptions& options = {});
Dataset parse_libsvm(std::string_view text, const ParseOptions& options = {});
Dataset load_libsvm(const std::string& path, const ParseOptions& options = {});

/// Canonical text form: "+1"/"-1" labels, 1-based indices, values printed
/// with round-trip precision.
std::string to_libsvm(const Dataset& data);

/// 64-bit FNV-1a of `to_libsvm(data)`, as 16 hex digits.
std::string dataset_hash(const Dataset& data);

/// Two Gaussian blobs in 2-D: odd (1-based) samples ~ N((-0.5,-0.5), 1.5^2 I)
/// with label -1, even samples ~ N((0.5,0.5), 1.5^2 I) with label +1.
Dataset generate_toy(std::size_t n, std::uint64_t seed);

/// Name recorded in the metadata of generated datasets.
inline constexpr std::string_view kToyGenerator = "mt19937_64/box-muller";

}  // namespace safescreen
