#include "lrpool/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <utility>

#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"
#include "text_util.hpp"

namespace lrpool {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double noise_draw(std::uint64_t seed, int sample, int dim_index) {
  const std::uint64_t cell =
      static_cast<std::uint64_t>(sample) * 4096 + dim_index;
  return rng::gaussian(rng::word(seed, rng::Stream::SyntheticData, cell, 0),
                       rng::word(seed, rng::Stream::SyntheticData, cell, 1));
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  throw ParameterError("unknown split");
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ParameterError("unknown split: " + name);
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::Blobs:
      return "blobs";
    case SyntheticKind::Spirals:
      return "spirals";
  }
  throw ParameterError("unknown synthetic kind");
}

SyntheticKind synthetic_kind_from_string(const std::string& name) {
  if (name == "blobs") return SyntheticKind::Blobs;
  if (name == "spirals") return SyntheticKind::Spirals;
  throw ParameterError("unknown synthetic kind: " + name);
}

const std::vector<int>& Dataset::indices(Split split) const {
  switch (split) {
    case Split::Train:
      return train_idx;
    case Split::Val:
      return val_idx;
    case Split::Test:
      return test_idx;
  }
  throw ParameterError("unknown split");
}

void Dataset::validate() const {
  if (n_samples < 1) throw ParameterError("dataset has no samples");
  if (dim < 1) throw ParameterError("dataset feature dim must be >= 1");
  if (n_classes < 2) throw ParameterError("n_classes must be >= 2");
  if (features.size() != static_cast<std::size_t>(n_samples) * dim)
    throw ParameterError("feature matrix size does not match n_samples*dim");
  if (labels.size() != static_cast<std::size_t>(n_samples))
    throw ParameterError("label count does not match n_samples");
  for (int y : labels)
    if (y < 0 || y >= n_classes)
      throw ParameterError("label " + std::to_string(y) +
                           " outside [0, n_classes)");
  std::vector<char> seen(n_samples, 0);
  for (const auto* set : {&train_idx, &val_idx, &test_idx}) {
    for (int i : *set) {
      if (i < 0 || i >= n_samples)
        throw ParameterError("split index " + std::to_string(i) +
                             " out of range");
      if (seen[i])
        throw ParameterError("split index sets overlap at sample " +
                             std::to_string(i));
      seen[i] = 1;
    }
  }
}

Dataset generate_synthetic(SyntheticKind kind, int n, int d, int n_classes,
                           double noise, std::uint64_t seed) {
  if (n_classes < 2)
    throw ParameterError("n_classes must be >= 2, got " +
                         std::to_string(n_classes));
  if (n < n_classes)
    throw ParameterError("n must be >= n_classes, got n=" + std::to_string(n));
  if (d < 2)
    throw ParameterError("feature dim must be >= 2, got " + std::to_string(d));
  if (noise < 0.0) throw ParameterError("noise must be non-negative");

  Dataset data;
  data.n_samples = n;
  data.dim = d;
  data.n_classes = n_classes;
  data.features.assign(static_cast<std::size_t>(n) * d, 0.0);
  data.labels.resize(n);

  // Round-robin labels keep class counts balanced within one sample.
  std::vector<int> class_count(n_classes, 0);
  for (int i = 0; i < n; ++i) {
    const int c = i % n_classes;
    data.labels[i] = c;
    ++class_count[c];
  }

  for (int i = 0; i < n; ++i) {
    const int c = data.labels[i];
    const int j = i / n_classes;  // index within class c
    double* x = data.features.data() + static_cast<std::size_t>(i) * d;

    if (kind == SyntheticKind::Blobs) {
      const double angle = kTwoPi * c / n_classes;
      x[0] = 5.0 * std::cos(angle);
      x[1] = 5.0 * std::sin(angle);
    } else {
      // Interleaved spiral arms: radius grows 0.25 -> 2.0 over 1.5 turns.
      const int m = class_count[c];
      const double s = m > 1 ? static_cast<double>(j) / (m - 1) : 0.0;
      const double angle = kTwoPi * (1.5 * s) + kTwoPi * c / n_classes;
      const double r = 0.25 + 1.75 * s;
      x[0] = r * std::cos(angle);
      x[1] = r * std::sin(angle);
    }
    if (noise > 0.0)
      for (int k = 0; k < d; ++k) x[k] += noise * noise_draw(seed, i, k);
  }

  assign_split(data, seed);
  data.validate();
  return data;
}

void assign_split(Dataset& data, std::uint64_t split_seed,
                  double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ParameterError("test_fraction must lie in [0,1)");
  const int n = data.n_samples;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng::below(
        rng::word(split_seed, rng::Stream::DataSplit, i), i + 1));
    std::swap(perm[i], perm[j]);
  }

  const int n_test = static_cast<int>(std::lround(test_fraction * n));
  const int n_val = static_cast<int>(std::lround(0.1 * (n - n_test)));
  data.split_seed = split_seed;
  data.test_idx.assign(perm.begin(), perm.begin() + n_test);
  data.val_idx.assign(perm.begin() + n_test, perm.begin() + n_test + n_val);
  data.train_idx.assign(perm.begin() + n_test + n_val, perm.end());
  // Sorted index sets make minibatch order independent of the shuffle above.
  std::sort(data.test_idx.begin(), data.test_idx.end());
  std::sort(data.val_idx.begin(), data.val_idx.end());
  std::sort(data.train_idx.begin(), data.train_idx.end());
}

Dataset load_csv(const std::string& path, std::uint64_t split_seed,
                 double test_fraction) {
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");

  std::string line;
  if (!std::getline(in, line))
    throw FileParseError(path, 1, "missing header row");
  const std::size_t n_cols = detail::split(detail::strip_cr(line), ',').size();
  if (n_cols < 2)
    throw FileParseError(path, 1, "need at least one feature column and a label column");

  Dataset data;
  data.dim = static_cast<int>(n_cols) - 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = detail::split(detail::strip_cr(line), ',');
    if (cells.size() == 1 && cells[0].empty()) continue;  // trailing blank
    if (cells.size() != n_cols)
      throw FileParseError(path, line_no,
                           "expected " + std::to_string(n_cols) +
                               " columns, got " + std::to_string(cells.size()));
    for (std::size_t c = 0; c + 1 < n_cols; ++c) {
      double v;
      if (!detail::parse_double(cells[c], v))
        throw FileParseError(path, line_no,
                             "non-numeric feature cell '" +
                                 std::string(cells[c]) + "'");
      data.features.push_back(v);
    }
    long y;
    if (!detail::parse_long(cells.back(), y) || y < 0)
      throw FileParseError(path, line_no,
                           "label cell '" + std::string(cells.back()) +
                               "' is not a non-negative integer");
    data.labels.push_back(static_cast<int>(y));
    data.n_classes = std::max(data.n_classes, static_cast<int>(y) + 1);
  }
  data.n_samples = static_cast<int>(data.labels.size());
  if (data.n_samples == 0) throw FileParseError(path, line_no, "no data rows");
  data.n_classes = std::max(data.n_classes, 2);

  assign_split(data, split_seed, test_fraction);
  data.validate();
  return data;
}

void save_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  for (int c = 0; c < data.dim; ++c) out << "f" << c << ",";
  out << "label\n";
  for (int i = 0; i < data.n_samples; ++i) {
    const double* x = data.row(i);
    for (int c = 0; c < data.dim; ++c)
      out << detail::format_double(x[c]) << ",";
    out << data.labels[i] << "\n";
  }
  if (!out) throw FileParseError(path, 0, "write failed");
}

}  // namespace lrpool
