#include "lrpool/lr_policy.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "lrpool/errors.hpp"
#include "nlohmann/json.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

// Half-cosine from `hi` at x=0 down to `lo` at x=1.
double cosine_decay(double lo, double hi, double x) {
  return lo + (hi - lo) * (1.0 + std::cos(kPi * x)) / 2.0;
}

double default_warmup_fraction(PolicyFamily family) {
  switch (family) {
    case PolicyFamily::WarmupCosineAnnealing:
      return 0.1;
    case PolicyFamily::OneCycle:
      return 0.3;
    default:
      return 0.0;
  }
}

// Milestone fractions to step indices; ties at a boundary belong to the
// later stage, so stage s covers [bounds[s], bounds[s+1]).
std::vector<int> stage_bounds(const std::vector<double>& milestones, int T) {
  std::vector<int> bounds;
  bounds.reserve(milestones.size() + 2);
  bounds.push_back(0);
  for (double m : milestones)
    bounds.push_back(static_cast<int>(std::floor(m * T)));
  bounds.push_back(T);
  return bounds;
}

double multistep_at(const LRPolicy& p, int t, int T) {
  int crossed = 0;
  for (double m : p.milestones)
    if (t >= static_cast<int>(std::floor(m * T))) ++crossed;
  return p.peak_lr * std::pow(p.gamma, crossed);
}

double warmup_cosine_at(const LRPolicy& p, int t, int T) {
  const int warmup = static_cast<int>(std::floor(p.warmup_fraction * T));
  if (t < warmup)
    return p.min_lr + (p.peak_lr - p.min_lr) * static_cast<double>(t) / warmup;
  const double x = static_cast<double>(t - warmup) / (T - warmup);
  return cosine_decay(p.min_lr, p.peak_lr, x);
}

double one_cycle_at(const LRPolicy& p, int t, int T) {
  const int ramp = static_cast<int>(std::lround(p.warmup_fraction * T));
  if (t < ramp) {
    // Cosine ramp: reaches peak_lr exactly at t == ramp, handled below.
    const double x = static_cast<double>(t) / ramp;
    return p.min_lr + (p.peak_lr - p.min_lr) * (1.0 - std::cos(kPi * x)) / 2.0;
  }
  const double x = static_cast<double>(t - ramp) / (T - ramp);
  return cosine_decay(p.min_lr, p.peak_lr, x);
}

double composite_at(const LRPolicy& p, int t, int T) {
  const auto bounds = stage_bounds(p.milestones, T);
  std::size_t stage = 0;
  while (stage + 2 < bounds.size() && t >= bounds[stage + 1]) ++stage;

  const double scale = std::pow(p.gamma, static_cast<double>(stage));
  const double hi = p.peak_lr * scale;
  const double lo = p.min_lr * scale;
  const int stage_len = bounds[stage + 1] - bounds[stage];
  const int offset = t - bounds[stage];
  const int n_cycles = p.cycles_per_stage[stage];

  // Equal-length cosine cycles (SGDR-style restarts). Each cycle starts at
  // `hi` and ends exactly at `lo` on its last step.
  for (int c = 0; c < n_cycles; ++c) {
    const int c_begin = static_cast<int>(
        (static_cast<long long>(c) * stage_len) / n_cycles);
    const int c_end = static_cast<int>(
        (static_cast<long long>(c + 1) * stage_len) / n_cycles);
    if (offset >= c_end) continue;
    const int len = c_end - c_begin;
    if (len <= 1) return hi;
    const double x = static_cast<double>(offset - c_begin) / (len - 1);
    return cosine_decay(lo, hi, x);
  }
  return lo;  // unreachable for offset < stage_len
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string to_string(PolicyFamily family) {
  switch (family) {
    case PolicyFamily::MultiStep:
      return "MultiStep";
    case PolicyFamily::WarmupCosineAnnealing:
      return "WarmupCosineAnnealing";
    case PolicyFamily::OneCycle:
      return "OneCycle";
    case PolicyFamily::Composite:
      return "Composite";
    case PolicyFamily::Constant:
      return "Constant";
  }
  throw ParameterError("unknown policy family");
}

PolicyFamily policy_family_from_string(const std::string& name) {
  if (name == "MultiStep") return PolicyFamily::MultiStep;
  if (name == "WarmupCosineAnnealing")
    return PolicyFamily::WarmupCosineAnnealing;
  if (name == "OneCycle") return PolicyFamily::OneCycle;
  if (name == "Composite") return PolicyFamily::Composite;
  if (name == "Constant") return PolicyFamily::Constant;
  throw ParameterError("unknown policy family: " + name);
}

void LRPolicy::validate() const {
  if (!(peak_lr > 0.0))
    throw ParameterError("k0 must be positive, got " + format_g(peak_lr));
  if (!(min_lr >= 0.0))
    throw ParameterError("k1 must be non-negative, got " + format_g(min_lr));
  if (min_lr > peak_lr)
    throw ParameterError("k1 must not exceed k0 (k1=" + format_g(min_lr) +
                         ", k0=" + format_g(peak_lr) + ")");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ParameterError("gamma must lie in (0,1], got " + format_g(gamma));
  double prev = 0.0;
  for (double m : milestones) {
    if (!(m > 0.0 && m < 1.0))
      throw ParameterError("milestones must lie in (0,1), got " + format_g(m));
    if (m <= prev)
      throw ParameterError("milestones must be strictly increasing");
    prev = m;
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
    throw ParameterError("warmup_fraction must lie in [0,1), got " +
                         format_g(warmup_fraction));
  if (family == PolicyFamily::Composite) {
    if (cycles_per_stage.size() != milestones.size() + 1)
      throw ParameterError(
          "cycles_per_stage must have len(milestones)+1 entries, got " +
          std::to_string(cycles_per_stage.size()));
    for (int c : cycles_per_stage)
      if (c < 1)
        throw ParameterError("cycles_per_stage entries must be positive");
  }
}

std::string LRPolicy::to_json() const {
  json j;
  j["family"] = to_string(family);
  j["k0"] = peak_lr;
  j["k1"] = min_lr;
  j["gamma"] = gamma;
  if (!milestones.empty()) j["milestones"] = milestones;
  if (!cycles_per_stage.empty()) j["cycles_per_stage"] = cycles_per_stage;
  j["warmup_fraction"] = warmup_fraction;
  return j.dump();
}

LRPolicy LRPolicy::from_json(const std::string& text) {
  json j = json::parse(text);
  LRPolicy p;
  p.family = policy_family_from_string(j.at("family").get<std::string>());
  p.peak_lr = j.at("k0").get<double>();
  p.min_lr = j.value("k1", 0.0);
  p.gamma = j.value("gamma", 1.0);
  if (j.contains("milestones"))
    p.milestones = j["milestones"].get<std::vector<double>>();
  if (j.contains("cycles_per_stage"))
    p.cycles_per_stage = j["cycles_per_stage"].get<std::vector<int>>();
  p.warmup_fraction =
      j.value("warmup_fraction", default_warmup_fraction(p.family));
  p.validate();
  return p;
}

std::string LRPolicy::label() const {
  std::string stem;
  switch (family) {
    case PolicyFamily::MultiStep:
      stem = "multistep";
      break;
    case PolicyFamily::WarmupCosineAnnealing:
      stem = "warmcos";
      break;
    case PolicyFamily::OneCycle:
      stem = "onecycle";
      break;
    case PolicyFamily::Composite:
      stem = "composite";
      break;
    case PolicyFamily::Constant:
      stem = "constant";
      break;
  }
  return stem + "_" + format_g(peak_lr);
}

LRPolicy make_multistep(double peak_lr, double gamma,
                        std::vector<double> milestones) {
  LRPolicy p;
  p.family = PolicyFamily::MultiStep;
  p.peak_lr = peak_lr;
  p.gamma = gamma;
  p.milestones = std::move(milestones);
  p.validate();
  return p;
}

LRPolicy make_warmup_cosine(double peak_lr, double min_lr,
                            double warmup_fraction) {
  LRPolicy p;
  p.family = PolicyFamily::WarmupCosineAnnealing;
  p.peak_lr = peak_lr;
  p.min_lr = min_lr;
  p.warmup_fraction = warmup_fraction;
  p.validate();
  return p;
}

LRPolicy make_one_cycle(double peak_lr, double min_lr,
                        double warmup_fraction) {
  LRPolicy p;
  p.family = PolicyFamily::OneCycle;
  p.peak_lr = peak_lr;
  p.min_lr = min_lr;
  p.warmup_fraction = warmup_fraction;
  p.validate();
  return p;
}

LRPolicy make_composite(double peak_lr, double min_lr, double gamma,
                        std::vector<double> milestones,
                        std::vector<int> cycles_per_stage) {
  LRPolicy p;
  p.family = PolicyFamily::Composite;
  p.peak_lr = peak_lr;
  p.min_lr = min_lr;
  p.gamma = gamma;
  p.milestones = std::move(milestones);
  p.cycles_per_stage = std::move(cycles_per_stage);
  p.validate();
  return p;
}

LRPolicy make_constant(double lr) {
  LRPolicy p;
  p.family = PolicyFamily::Constant;
  p.peak_lr = lr;
  p.min_lr = lr;
  p.validate();
  return p;
}

void TrainingBudget::validate() const {
  if (total_steps < 1)
    throw ParameterError("total_steps must be >= 1, got " +
                         std::to_string(total_steps));
}

double lr_at(const LRPolicy& policy, int t, TrainingBudget budget) {
  policy.validate();
  budget.validate();
  const int T = budget.total_steps;
  if (t < 0 || t >= T)
    throw ParameterError("step index t must lie in [0, T), got t=" +
                         std::to_string(t) + ", T=" + std::to_string(T));
  if (T == 1) return policy.peak_lr;

  switch (policy.family) {
    case PolicyFamily::Constant:
      return policy.peak_lr;
    case PolicyFamily::MultiStep:
      return multistep_at(policy, t, T);
    case PolicyFamily::WarmupCosineAnnealing:
      return warmup_cosine_at(policy, t, T);
    case PolicyFamily::OneCycle:
      return one_cycle_at(policy, t, T);
    case PolicyFamily::Composite:
      return composite_at(policy, t, T);
  }
  throw ParameterError("unknown policy family");
}

std::vector<std::pair<int, double>> render_schedule(const LRPolicy& policy,
                                                    TrainingBudget budget) {
  budget.validate();
  std::vector<std::pair<int, double>> schedule;
  schedule.reserve(budget.total_steps);
  for (int t = 0; t < budget.total_steps; ++t)
    schedule.emplace_back(t, lr_at(policy, t, budget));
  return schedule;
}

std::vector<LRPolicy> default_tuning_grid(double lr_scale) {
  if (!(lr_scale > 0.0))
    throw ParameterError("lr_scale must be positive");
  const double s = lr_scale;
  std::vector<LRPolicy> grid;
  grid.reserve(16);
  for (double k0 : {0.2, 0.1, 0.05, 0.01})
    grid.push_back(make_multistep(k0 * s, 0.2, {0.3, 0.6, 0.8}));
  for (double k0 : {0.4, 0.2, 0.1, 0.05})
    grid.push_back(make_one_cycle(k0 * s, 0.0));
  for (double k0 : {0.2, 0.1, 0.05, 0.01})
    grid.push_back(make_warmup_cosine(k0 * s, 0.0));
  for (auto [k0, k1] : {std::pair{1.0, 0.2},
                        {0.5, 0.1},
                        {0.25, 0.05},
                        {0.05, 0.01}})
    grid.push_back(make_composite(k0 * s, k1 * s, 0.1, {0.45, 0.9}, {3, 2, 1}));
  return grid;
}

}  // namespace lrpool
