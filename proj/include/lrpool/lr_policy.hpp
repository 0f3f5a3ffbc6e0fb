#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lrpool {

enum class PolicyFamily {
  MultiStep,
  WarmupCosineAnnealing,
  OneCycle,
  Composite,
  Constant,
};

std::string to_string(PolicyFamily family);
PolicyFamily policy_family_from_string(const std::string& name);

/// A parameterized learning-rate schedule. `peak_lr` (k0) is the initial LR
/// for MultiStep/WarmupCosineAnnealing and the maximum LR for
/// OneCycle/Composite; `min_lr` (k1) is the lower bound. Milestones are
/// fractions of the total budget.
struct LRPolicy {
  PolicyFamily family = PolicyFamily::Constant;
  double peak_lr = 0.1;                  // k0
  double min_lr = 0.0;                   // k1
  double gamma = 1.0;                    // decay factor per milestone
  std::vector<double> milestones;        // strictly increasing, in (0,1)
  std::vector<int> cycles_per_stage;     // Composite only; one per stage
  double warmup_fraction = 0.0;

  /// Throws ParameterError naming the violated invariant.
  void validate() const;

  /// Serialized form used everywhere a policy crosses a file boundary.
  std::string to_json() const;
  static LRPolicy from_json(const std::string& text);

  /// Short stable identifier, e.g. "multistep_0.1".
  std::string label() const;

  bool operator==(const LRPolicy&) const = default;
};

// Family constructors applying the documented defaults.
LRPolicy make_multistep(double peak_lr, double gamma,
                        std::vector<double> milestones);
LRPolicy make_warmup_cosine(double peak_lr, double min_lr = 0.0,
                            double warmup_fraction = 0.1);
LRPolicy make_one_cycle(double peak_lr, double min_lr = 0.0,
                        double warmup_fraction = 0.3);
LRPolicy make_composite(double peak_lr, double min_lr, double gamma,
                        std::vector<double> milestones,
                        std::vector<int> cycles_per_stage);
LRPolicy make_constant(double lr);

struct TrainingBudget {
  int total_steps = 1;  // epochs or iterations, consistent per run

  void validate() const;
};

/// LR value at step t of a T-step budget. Pure: identical arguments yield
/// bit-identical results. Throws ParameterError for t outside [0, T) or a
/// malformed policy.
double lr_at(const LRPolicy& policy, int t, TrainingBudget budget);

/// Full (t, lr) schedule; element t equals lr_at(policy, t, budget).
std::vector<std::pair<int, double>> render_schedule(const LRPolicy& policy,
                                                    TrainingBudget budget);

/// The standard 16-policy tuning grid (four families, four LR scales each),
/// with every LR multiplied by `lr_scale`.
std::vector<LRPolicy> default_tuning_grid(double lr_scale = 1.0);

}  // namespace lrpool
