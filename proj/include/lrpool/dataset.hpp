#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lrpool {

enum class Split { Train, Val, Test };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

/// A small labeled dataset with a deterministic train/val/test partition.
/// The test fraction is held out first; the remainder is split 9:1 into
/// train and validation.
struct Dataset {
  std::vector<double> features;  // row-major n x d
  std::vector<int> labels;       // length n, values in [0, n_classes)
  int n_samples = 0;
  int dim = 0;
  int n_classes = 0;
  std::uint64_t split_seed = 0;
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  std::vector<int> test_idx;

  const double* row(int i) const { return features.data() + static_cast<std::size_t>(i) * dim; }
  const std::vector<int>& indices(Split split) const;

  /// Checks shapes, label range, and that the split index sets are disjoint
  /// and cover a subset of [0, n). Throws ParameterError.
  void validate() const;
};

enum class SyntheticKind { Blobs, Spirals };

std::string to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(const std::string& name);

/// Deterministic 2-D-style toy classification data. Blobs are Gaussian
/// clusters on a circle of radius 5; Spirals are interleaved 1.5-turn arms.
/// Class counts are balanced within one sample. Requires n >= n_classes >= 2
/// and d >= 2.
Dataset generate_synthetic(SyntheticKind kind, int n, int d, int n_classes,
                           double noise, std::uint64_t seed);

/// Reassigns the train/val/test partition in place. `test_fraction` of the
/// samples are held out; the rest are split 9:1 train:val.
void assign_split(Dataset& data, std::uint64_t split_seed,
                  double test_fraction = 0.2);

/// CSV with a header row, numeric feature columns, and a final integer label
/// column. Malformed rows raise FileParseError with the line number.
Dataset load_csv(const std::string& path, std::uint64_t split_seed,
                 double test_fraction = 0.2);

/// Writes features at full 17-significant-digit precision so a round trip
/// through load_csv reproduces the matrix exactly.
void save_csv(const Dataset& data, const std::string& path);

}  // namespace lrpool
