#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrpool/prediction.hpp"

namespace lrpool {

/// Above this pool size the exhaustive methods refuse rather than silently
/// sample (C(24,12) ~ 2.7M subsets is still tractable; beyond is not).
constexpr int kMaxEnumerationPool = 24;

/// A pool of candidate models: validation-split prediction matrices sharing
/// one labeled evaluation set. Members are kept sorted by model_id so every
/// enumeration order (and therefore every tie break) is reproducible.
struct ModelPool {
  std::vector<std::string> ids;              // sorted ascending
  std::vector<PredictionMatrix> members;     // parallel to ids
  LabeledEvalSet eval;

  void add(PredictionMatrix m);              // rejects duplicate ids
  int index_of(const std::string& id) const; // -1 when absent
  const PredictionMatrix& member(const std::string& id) const;
  int size() const { return static_cast<int>(ids.size()); }

  void validate() const;  // shared shape, eval length matches
};

struct EnsembleTeam {
  std::vector<std::string> member_ids;  // ordered, duplicate-free
  double val_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::optional<double> fq_gd_score;
};

/// Exhaustive search for the size-k team with the best soft-vote validation
/// accuracy. Ties go to the lexicographically smallest id set.
EnsembleTeam brute_force(const ModelPool& pool, int k);

/// Starts from the best single model, then repeatedly adds the unused model
/// that most improves (or least hurts) soft-vote validation accuracy until
/// the team has k members. Ties go to the lowest id.
EnsembleTeam greedy(const ModelPool& pool, int k);

struct RandomSelectResult {
  std::vector<EnsembleTeam> teams;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation
};

/// `trials` uniform size-k teams (members drawn without replacement within a
/// team, independently across trials), deterministic given seed.
RandomSelectResult random_select(const ModelPool& pool, int k, int trials,
                                 std::uint64_t seed);

/// Focal diversity of one team. For each focal member f with a non-empty
/// validation failure set S_f: over S_f, p_k is the fraction of samples on
/// which exactly k of the M members fail, p(1) = sum_k (k/M) p_k,
/// p(2) = sum_k k(k-1)/(M(M-1)) p_k, and lambda_f = 1 - p(2)/p(1).
/// fq_gd_score = 1 - mean of the available lambdas (lower = more
/// complementary); focals that never fail are excluded, and a team where
/// every focal is failure-free scores 0.
struct FocalDiversityReport {
  EnsembleTeam team;
  std::vector<std::pair<std::string, std::optional<double>>> per_focal_lambda;
  double fq_gd_score = 0.0;
};

FocalDiversityReport focal_diversity(const ModelPool& pool,
                                     const std::vector<std::string>& team_ids);

/// Exhaustive search for the size-k team with the lowest fq_gd_score; ties
/// go to the higher soft-vote validation accuracy, then the
/// lexicographically smallest id set. Requires k >= 2.
EnsembleTeam focal_select(const ModelPool& pool, int k);

enum class SelectionMethod { BruteForce, Greedy, Random, FocalDiversity };

std::string to_string(SelectionMethod m);
SelectionMethod selection_method_from_string(const std::string& name);

struct SweepRow {
  std::string method;  // method name, "best_single", or "entire_ensemble"
  int size = 0;
  double val_acc = 0.0;
  std::optional<double> test_acc;
  std::optional<double> fq_gd;
  EnsembleTeam team;                  // random rows: representative stats only
  std::optional<double> val_std;      // random rows
  std::vector<EnsembleTeam> sampled;  // random rows: the individual teams
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

/// Runs each method at each size and brackets the table with best-single and
/// entire-ensemble rows. Size-1 rows for the non-random methods all reduce
/// to the best single model (diversity of a singleton is left blank).
/// test_pool, when given, must hold matching ids over the test split; team
/// test accuracies are reported from it but never used for selection.
SweepReport selection_sweep(const ModelPool& pool, const ModelPool* test_pool,
                            const std::vector<SelectionMethod>& methods,
                            const std::vector<int>& sizes,
                            int random_trials = 30, std::uint64_t seed = 0);

/// CSV with header `method,size,val_acc,test_acc,fq_gd`; absent cells stay
/// empty. Values use the shortest round-trip decimal form.
void write_sweep_csv(const SweepReport& report, const std::string& path);

/// Companion JSON naming every selected team (and, for random rows, the
/// sampled teams and accuracy spread).
void write_sweep_teams_json(const SweepReport& report, const std::string& path);

}  // namespace lrpool
