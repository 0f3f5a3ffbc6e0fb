#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrpool/dataset.hpp"
#include "lrpool/mlp.hpp"
#include "lrpool/selection.hpp"
#include "lrpool/trainer.hpp"
#include "lrpool/tuning.hpp"

namespace lrpool {

/// Everything needed to train one trial: data source, architecture, and
/// optimizer settings. Per-trial seeds are derived from (init_seed, trial
/// seed) and (shuffle_seed, trial seed), so one shared trial seed gives
/// every policy the same initialization.
struct TaskConfig {
  std::string task_id = "task";

  // Data source: a CSV path, or synthetic when csv_path is empty.
  std::string csv_path;
  SyntheticKind kind = SyntheticKind::Spirals;
  int n = 200;
  int d = 2;
  int n_classes = 2;
  double noise = 0.2;
  std::uint64_t data_seed = 0;

  std::string dataset_id;     // defaults to a descriptive label
  ModelSpec model;
  std::string model_spec_id;  // defaults to a descriptive label
  TrainerConfig trainer;

  void validate() const;
  Dataset build_dataset() const;
  std::string effective_dataset_id() const;
  std::string effective_model_spec_id() const;

  std::string to_json() const;
  static TaskConfig from_json(const std::string& text);
};

/// Run-directory layout: trials.jsonl plus checkpoints/, predictions/ and
/// reports/ subdirectories.
struct RunLayout {
  std::string run_dir;

  std::string trials_path() const { return run_dir + "/trials.jsonl"; }
  std::string checkpoints_dir() const { return run_dir + "/checkpoints"; }
  std::string predictions_dir() const { return run_dir + "/predictions"; }
  std::string reports_dir() const { return run_dir + "/reports"; }
  std::string checkpoint_path(const std::string& model_id) const;
  std::string prediction_path(const std::string& model_id, Split split) const;
  std::string labels_path(Split split) const;

  void prepare() const;  // creates the directories
};

struct SearchOutcome {
  std::vector<TrialRecord> records;  // one per searched (policy, seed) pair
  int skipped = 0;                   // pairs already successful in the db
  int failed = 0;
};

/// Runs the search, training each not-yet-successful (policy, seed) pair,
/// writing checkpoints and val/test prediction files, and appending
/// one line per executed trial to trials.jsonl. Failed trials (divergence)
/// are recorded with status=failed and the search continues. `jobs` > 1
/// trains pairs concurrently; records are appended in pair order either
/// way, so the database content is independent of jobs.
SearchOutcome run_search(const TuningSpec& spec, const TaskConfig& task,
                         const RunLayout& layout, int jobs = 1);

struct LoadedPools {
  ModelPool val;
  ModelPool test;
};

/// Rebuilds validation/test model pools from a run directory's prediction
/// files, one member per successful trial.
LoadedPools load_pools(const RunLayout& layout,
                       const std::vector<TrialRecord>& records);

/// Parsed `tune` configuration: the search plus the task it runs on.
struct TuneConfig {
  TuningSpec spec;
  TaskConfig task;

  static TuneConfig from_json(const std::string& text);
};

TuneConfig load_tune_config(const std::string& path);

/// The pinned desk-scale suite: Spirals n=2000, the 16-policy grid with LRs
/// scaled by 0.1, one shared seed. Used by the end-to-end report tests.
TuneConfig desk_suite_config();

}  // namespace lrpool
