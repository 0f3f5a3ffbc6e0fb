#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrpool/dataset.hpp"
#include "lrpool/lr_policy.hpp"

namespace lrpool {

enum class Activation { ReLU, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Architecture of a small fully-connected classifier:
/// layer_sizes = [input_dim, hidden..., n_classes].
struct ModelSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::ReLU;
  std::uint64_t init_seed = 0;

  void validate() const;  // >= 1 hidden layer, all sizes positive
  int param_count() const;
  int n_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }

  /// Flat offset of layer `l`'s block (weights row-major [out][in], then
  /// biases). Layer n_layers() marks one past the end.
  int layer_offset(int l) const;

  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);

  bool operator==(const ModelSpec&) const = default;
};

struct FinalMetrics {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  double test_accuracy = 0.0;
};

/// A trained classifier: architecture plus the flat parameter vector theta
/// (per layer: weights row-major, then biases) and the policy it was
/// trained under.
struct TrainedModel {
  ModelSpec spec;
  std::vector<double> parameters;
  LRPolicy policy_used;
  FinalMetrics final_metrics;

  void validate() const;  // parameter count matches spec, all values finite
};

/// He-uniform weights (zero biases), a pure function of (spec.init_seed,
/// flat parameter index).
std::vector<double> init_parameters(const ModelSpec& spec);

/// Reusable per-layer activation/delta buffers so batch loops do not
/// allocate. Bound to one ModelSpec shape.
struct Workspace {
  explicit Workspace(const ModelSpec& spec);
  std::vector<std::vector<double>> acts;    // acts[0]=input .. acts[L]=probs
  std::vector<std::vector<double>> deltas;  // per non-input layer
};

/// Forward pass for one sample; leaves softmax probabilities in
/// ws.acts.back().
void forward(const ModelSpec& spec, const double* params, const double* x,
             Workspace& ws);

/// Forward + backward for one sample. Returns the cross-entropy loss against
/// the smoothed target (1-ls)*onehot + ls/C and accumulates d(loss)/d(theta)
/// into grad_accum (caller zeroes it per batch).
double loss_and_grad(const ModelSpec& spec, const double* params,
                     const double* x, int label, double label_smoothing,
                     Workspace& ws, double* grad_accum);

/// Mean loss over a set of sample indices (no gradient).
double mean_loss(const ModelSpec& spec, const double* params,
                 const Dataset& data, const std::vector<int>& idx,
                 double label_smoothing);

/// Fraction of samples whose argmax class matches the label; argmax ties go
/// to the lowest class index.
double split_accuracy(const ModelSpec& spec, const double* params,
                      const Dataset& data, const std::vector<int>& idx);

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Central finite differences (step 1e-6) against the analytic gradient on
/// up to 32 training samples, with label smoothing 0.1 so the smoothed-loss
/// path is the one checked. Relative error per coordinate is
/// |a-n| / max(|a|+|n|, 1e-8).
GradCheckReport gradient_check(const ModelSpec& spec, const Dataset& data,
                               double tolerance);

/// Cosine similarity of two models' flat parameter vectors; the output
/// layer's weights and biases are skipped when exclude_output_layer is set.
/// Specs must be identical.
double parameter_cosine(const TrainedModel& a, const TrainedModel& b,
                        bool exclude_output_layer);

}  // namespace lrpool
