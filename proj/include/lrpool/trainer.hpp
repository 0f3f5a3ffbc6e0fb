#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrpool/dataset.hpp"
#include "lrpool/lr_policy.hpp"
#include "lrpool/mlp.hpp"
#include "lrpool/prediction.hpp"

namespace lrpool {

struct TrainerConfig {
  int batch_size = 32;
  double momentum = 0.9;          // in [0, 1)
  double label_smoothing = 0.0;   // in [0, 1)
  std::uint64_t shuffle_seed = 0;
  TrainingBudget budget;          // total_steps = epochs
  int snapshot_every = 0;         // keep parameters every k epochs (0 = none)

  void validate() const;
  std::string to_json() const;
  static TrainerConfig from_json(const std::string& text);
};

struct EpochSnapshot {
  int epoch = 0;
  std::vector<double> parameters;
};

/// Mini-batch SGD with momentum. The LR for epoch t is lr_at(policy, t, T);
/// it is constant within the epoch. Fully deterministic given
/// (spec.init_seed, cfg.shuffle_seed). Throws DivergedError (carrying the
/// epoch) when any batch loss is non-finite or exceeds 1e6.
///
/// Validation loss is computed with the same label smoothing as training
/// (it is the training objective, just on held-out data). Empty val/test
/// splits leave their metrics at 0.
TrainedModel train(const ModelSpec& spec, const Dataset& data,
                   const LRPolicy& policy, const TrainerConfig& cfg,
                   std::vector<EpochSnapshot>* snapshots = nullptr);

/// Row-stochastic softmax outputs over one split of the dataset. The
/// matrix's model_id defaults to the policy label when left empty.
PredictionMatrix predict_proba(const TrainedModel& model, const Dataset& data,
                               Split split, const std::string& model_id = "");

/// Checkpoint: JSON metadata plus the parameter vector as decimal strings at
/// 17 significant digits, so load_checkpoint reproduces theta bit-exactly.
void save_checkpoint(const TrainedModel& model, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

}  // namespace lrpool
