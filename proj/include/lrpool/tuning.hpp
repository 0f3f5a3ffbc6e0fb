#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrpool/lr_policy.hpp"

namespace lrpool {

/// One tuning trial. trial_id is a stable hash of (policy, seed, task), so
/// reruns of the same pair land on the same id.
struct TrialRecord {
  std::string trial_id;
  LRPolicy policy;
  std::uint64_t seed = 0;
  std::string task_id;
  std::string dataset_id;
  std::string model_spec_id;
  std::string model_id;            // human-readable, e.g. "multistep_0.2_s0"
  std::string status = "success";  // "success" or "failed"
  std::string error_text;          // set when failed
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double val_loss = 0.0;
  double train_loss = 0.0;
  std::string checkpoint_path;
  std::string prediction_path;       // validation-split predictions
  std::string test_prediction_path;
  double wall_time_seconds = 0.0;

  void validate() const;
  std::string to_json() const;
  static TrialRecord from_json(const std::string& text);
};

/// 16-hex-digit FNV-1a over (policy JSON, seed, task_id). Fixed width keeps
/// lexicographic and numeric order identical.
std::string make_trial_id(const LRPolicy& policy, std::uint64_t seed,
                          const std::string& task_id);

enum class SearchKind { Grid, Random };

std::string to_string(SearchKind k);
SearchKind search_kind_from_string(const std::string& name);

struct TuningSpec {
  std::string task_id;
  std::vector<LRPolicy> candidate_policies;
  std::vector<std::uint64_t> seeds;
  SearchKind search = SearchKind::Grid;
  int n_samples = 0;              // Random only
  std::uint64_t search_seed = 0;  // Random only

  void validate() const;
};

/// The (policy index, seed index) pairs a search will visit, in execution
/// order. Grid: every pair exactly once, policy-major. Random: n_samples
/// pairs drawn uniformly with replacement, deterministic given search_seed.
std::vector<std::pair<int, int>> search_pairs(const TuningSpec& spec);

/// JSON-Lines trial database. Loading drops superseded lines: when several
/// lines share a trial_id (a failed pair was rerun), the last one wins.
std::vector<TrialRecord> load_trials(const std::string& path);
void append_trial(const std::string& path, const TrialRecord& record);

/// Highest validation accuracy among successful records; ties go to the
/// smaller trial_id. Throws EmptyResultError when nothing succeeded.
TrialRecord best_policy(const std::vector<TrialRecord>& records);

struct TrialQuery {
  std::optional<std::string> dataset_id;
  std::optional<std::string> model_spec_id;
  std::optional<std::string> task_id;
};

/// Up to n successful records matching every present query field, sorted by
/// validation accuracy descending, then trial_id ascending. May be empty.
std::vector<TrialRecord> recommend_top_n(const std::vector<TrialRecord>& records,
                                         const TrialQuery& query, int n);

}  // namespace lrpool
