#pragma once

#include <string>
#include <vector>

namespace lrpool {

/// Per-model class-probability rows over one evaluation split. Probabilities
/// (not logits) are the interchange unit; each row sums to 1 within 1e-6.
struct PredictionMatrix {
  std::string model_id;
  int n_samples = 0;
  int n_classes = 0;
  std::string split_tag;       // "train" / "val" / "test" / custom
  std::vector<double> probs;   // row-major n x C

  double at(int i, int c) const {
    return probs[static_cast<std::size_t>(i) * n_classes + c];
  }
  double& at(int i, int c) {
    return probs[static_cast<std::size_t>(i) * n_classes + c];
  }

  void validate() const;  // shape, entries in [0,1], row sums within 1e-6
};

struct LabeledEvalSet {
  std::vector<int> labels;
  int n_classes = 0;

  void validate() const;
};

/// Index of the largest value in [row, row+n); ties go to the lowest index.
int argmax_lowest(const double* row, int n);

/// Element-wise mean of the members' probability matrices. All members must
/// share (n_samples, n_classes, split_tag).
PredictionMatrix soft_vote(const std::vector<PredictionMatrix>& members);

/// Per-sample modal argmax. Ties are broken in favour of the tied class with
/// the highest probability summed across members, then the lowest index.
std::vector<int> majority_vote(const std::vector<PredictionMatrix>& members);

/// Fraction of rows whose argmax equals the label.
double accuracy(const PredictionMatrix& preds, const LabeledEvalSet& eval);

double labels_accuracy(const std::vector<int>& predicted,
                       const LabeledEvalSet& eval);

/// CSV with header `#model_id=...,n=...,c=...,split=...`, then one
/// probability row per sample at 17 significant digits (exact round trip).
void write_prediction_csv(const PredictionMatrix& m, const std::string& path);
PredictionMatrix read_prediction_csv(const std::string& path);

/// Single-column CSV with header `label`.
void write_labels_csv(const std::vector<int>& labels, const std::string& path);
std::vector<int> read_labels_csv(const std::string& path);

}  // namespace lrpool
