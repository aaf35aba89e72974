#include "safescreen/dataset.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>
#include <sstream>

#include "safescreen/errors.hpp"

namespace safescreen {

Dataset::Dataset(std::vector<Sample> samples, std::size_t dim, DatasetMetadata metadata)
    : samples_(std::move(samples)), metadata_(std::move(metadata)) {
  if (samples_.empty()) throw DataError("empty dataset");
  std::size_t max_index = 0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.label != -1 && s.label != 1)
      throw DataError("sample " + std::to_string(i + 1) + ": label must be -1 or +1");
    for (std::size_t k = 0; k < s.features.size(); ++k) {
      if (!std::isfinite(s.features[k].value))
        throw DataError("sample " + std::to_string(i + 1) + ": non-finite feature value");
      if (k > 0 && s.features[k].index <= s.features[k - 1].index)
        throw DataError("sample " + std::to_string(i + 1) + ": indices not increasing");
    }
    if (!s.features.empty()) max_index = std::max(max_index, s.features.back().index + 1);
  }
  if (dim == 0) dim = std::max<std::size_t>(max_index, 1);
  if (max_index > dim) throw DataError("feature index exceeds declared dimension");
  dim_ = dim;
}

namespace {

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_index(std::string_view token, std::size_t& out) {
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) tokens.push_back(line.substr(start, pos - start));
  }
  return tokens;
}

Sample parse_line(std::string_view line, std::size_t line_no, const ParseOptions& options) {
  auto tokens = split_ws(line);
  Sample sample;
  double label = 0.0;
  if (!parse_double(tokens[0], label))
    throw ParseError(line_no, "cannot parse label '" + std::string(tokens[0]) + "'");
  if (label == 1.0) {
    sample.label = 1;
  } else if (label == -1.0) {
    sample.label = -1;
  } else if (label == 0.0 && options.zero_label_is_negative) {
    sample.label = -1;
  } else {
    throw ParseError(line_no, "label '" + std::string(tokens[0]) + "' is not -1 or +1");
  }

  sample.features.reserve(tokens.size() - 1);
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    std::string_view tok = tokens[t];
    auto colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
    std::size_t index = 0;
    double value = 0.0;
    if (!parse_index(tok.substr(0, colon), index) || index == 0)
      throw ParseError(line_no, "bad feature index in '" + std::string(tok) + "'");
    if (!parse_double(tok.substr(colon + 1), value) || !std::isfinite(value))
      throw ParseError(line_no, "bad feature value in '" + std::string(tok) + "'");
    if (!sample.features.empty() && index - 1 <= sample.features.back().index)
      throw ParseError(line_no, "indices not increasing");
    sample.features.push_back({index - 1, value});
  }
  return sample;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const ParseOptions& options) {
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_ws(line).empty()) continue;
    samples.push_back(parse_line(line, line_no, options));
  }
  if (samples.empty()) throw DataError("empty dataset");
  return Dataset(std::move(samples));
}

Dataset parse_libsvm(std::string_view text, const ParseOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, options);
}

Dataset load_libsvm(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_libsvm(in, options);
}

std::string to_libsvm(const Dataset& data) {
  std::string out;
  char buf[64];
  for (const Sample& s : data.samples()) {
    out += s.label > 0 ? "+1" : "-1";
    for (const Feature& f : s.features) {
      std::snprintf(buf, sizeof buf, " %zu:%.17g", f.index + 1, f.value);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string dataset_hash(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_libsvm(data)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset generate_toy(std::size_t n, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw DataError("toy dataset size must be even and at least 2");
  std::mt19937_64 rng(seed);
  // 53-bit uniform in [0, 1); implementation-independent unlike
  // std::normal_distribution.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  constexpr double sigma = 1.5;

  std::vector<Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool odd = (i + 1) % 2 == 1;
    const double mean = odd ? -0.5 : 0.5;
    const double radius = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    Sample s;
    s.label = odd ? -1 : 1;
    s.features = {{0, mean + sigma * radius * std::cos(angle)},
                  {1, mean + sigma * radius * std::sin(angle)}};
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), 2, {std::string(kToyGenerator), seed});
}

}  // namespace safescreen
