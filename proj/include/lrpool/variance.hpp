#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lrpool {

enum class DrawDist { Normal, Uniform };

std::string to_string(DrawDist d);
DrawDist draw_dist_from_string(const std::string& name);

/// Scalar SGD update theta_{t+1} = theta_t - eta_t * g_t with eta_t and g_t
/// drawn i.i.d. per step from fixed distributions (frozen-gradient
/// idealization: the gradient moments never depend on theta). The Uniform
/// option matches moments via endpoints mu +/- sqrt(3*sigma^2). A Normal
/// learning rate may go negative; that tail is left as-is.
struct VarianceSimConfig {
  double mu_g = 0.0;
  double sigma_g2 = 0.0;
  double mu_eta = 0.0;
  double sigma_eta2 = 0.0;
  DrawDist grad_dist = DrawDist::Normal;
  DrawDist lr_dist = DrawDist::Normal;
  double theta0 = 0.0;
  double theta0_var = 0.0;  // 0 = fixed initialization
  int T = 1;
  long long trials = 1;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static VarianceSimConfig from_json(const std::string& text);
};

/// Closed-form trajectory Var(theta_t) for t = 0..T:
/// Var(theta_0) = theta0_var, then each step adds
/// mu_eta^2*sigma_g^2 + mu_g^2*sigma_eta^2 + sigma_eta^2*sigma_g^2.
std::vector<double> predicted_variance(const VarianceSimConfig& cfg);

struct SimResult {
  double empirical_mean = 0.0;          // mean of theta_T over trials
  double empirical_var = 0.0;           // population variance of theta_T
  std::vector<double> per_step_var;     // t = 0..T
};

/// Monte Carlo run; deterministic given cfg.seed (counter-based draws keyed
/// by (seed, trial, step), so results are independent of execution order).
SimResult simulate(const VarianceSimConfig& cfg);

struct VarianceCompareStep {
  int t = 0;
  double predicted = 0.0;
  double empirical = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct VarianceCompareReport {
  bool consistent = false;  // predicted final variance inside its CI
  double z_gap = 0.0;       // (empirical - predicted) / bootstrap std, final step
  double confidence = 0.0;
  std::vector<VarianceCompareStep> steps;  // t = 0..T
  double empirical_mean_final = 0.0;
  double expected_mean_final = 0.0;        // theta0 - T*mu_eta*mu_g
};

/// Percentile-bootstrap check (B resamples of the per-trial trajectories)
/// of the closed form against the simulation. Refuses trials < 1000: the
/// bootstrap interval is meaningless below that.
VarianceCompareReport compare(const VarianceSimConfig& cfg,
                              double confidence = 0.99,
                              int bootstrap_resamples = 200);

/// CSV trajectory `t,predicted_var,empirical_var,ci_lo,ci_hi`.
void write_compare_csv(const VarianceCompareReport& report,
                       const std::string& path);

}  // namespace lrpool
