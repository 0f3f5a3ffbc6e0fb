#include "lrpool/variance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"
#include "nlohmann/json.hpp"
#include "text_util.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

double draw(DrawDist dist, double mu, double sigma2, std::uint64_t seed,
            rng::Stream stream, long long trial, int step) {
  if (dist == DrawDist::Normal) {
    const double z =
        rng::gaussian(rng::word(seed, stream, trial, 2 * step),
                      rng::word(seed, stream, trial, 2 * step + 1));
    return mu + std::sqrt(sigma2) * z;
  }
  const double u = rng::uniform01(rng::word(seed, stream, trial, step));
  return mu + std::sqrt(3.0 * sigma2) * (2.0 * u - 1.0);
}

// Population variance via sum/sum-of-squares (values here are O(1), so the
// one-pass form is accurate enough for CI bounds).
double var_of(const double* x, long long n) {
  double sum = 0.0, sumsq = 0.0;
  for (long long i = 0; i < n; ++i) {
    sum += x[i];
    sumsq += x[i] * x[i];
  }
  const double mean = sum / n;
  return std::max(0.0, sumsq / n - mean * mean);
}

double percentile(std::vector<double> sorted_values, double q) {
  const double pos = q * (sorted_values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - lo;
  if (lo + 1 >= sorted_values.size()) return sorted_values.back();
  return sorted_values[lo] * (1.0 - frac) + sorted_values[lo + 1] * frac;
}

}  // namespace

std::string to_string(DrawDist d) {
  switch (d) {
    case DrawDist::Normal:
      return "Normal";
    case DrawDist::Uniform:
      return "Uniform";
  }
  throw ParameterError("unknown distribution");
}

DrawDist draw_dist_from_string(const std::string& name) {
  if (name == "Normal") return DrawDist::Normal;
  if (name == "Uniform") return DrawDist::Uniform;
  throw ParameterError("unknown distribution: " + name);
}

void VarianceSimConfig::validate() const {
  if (sigma_g2 < 0.0) throw ParameterError("sigma_g2 must be non-negative");
  if (sigma_eta2 < 0.0)
    throw ParameterError("sigma_eta2 must be non-negative");
  if (theta0_var < 0.0)
    throw ParameterError("theta0_var must be non-negative");
  if (T < 1) throw ParameterError("T must be >= 1");
  if (trials < 1) throw ParameterError("trials must be >= 1");
}

std::string VarianceSimConfig::to_json() const {
  json j;
  j["mu_g"] = mu_g;
  j["sigma_g2"] = sigma_g2;
  j["mu_eta"] = mu_eta;
  j["sigma_eta2"] = sigma_eta2;
  j["grad_dist"] = to_string(grad_dist);
  j["lr_dist"] = to_string(lr_dist);
  j["theta0"] = theta0;
  j["theta0_var"] = theta0_var;
  j["T"] = T;
  j["trials"] = trials;
  j["seed"] = seed;
  return j.dump();
}

VarianceSimConfig VarianceSimConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  VarianceSimConfig cfg;
  cfg.mu_g = j.value("mu_g", 0.0);
  cfg.sigma_g2 = j.value("sigma_g2", 0.0);
  cfg.mu_eta = j.value("mu_eta", 0.0);
  cfg.sigma_eta2 = j.value("sigma_eta2", 0.0);
  cfg.grad_dist =
      draw_dist_from_string(j.value("grad_dist", std::string("Normal")));
  cfg.lr_dist =
      draw_dist_from_string(j.value("lr_dist", std::string("Normal")));
  cfg.theta0 = j.value("theta0", 0.0);
  cfg.theta0_var = j.value("theta0_var", 0.0);
  cfg.T = j.value("T", 1);
  cfg.trials = j.value("trials", 1LL);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.validate();
  return cfg;
}

std::vector<double> predicted_variance(const VarianceSimConfig& cfg) {
  cfg.validate();
  const double step = cfg.mu_eta * cfg.mu_eta * cfg.sigma_g2 +
                      cfg.mu_g * cfg.mu_g * cfg.sigma_eta2 +
                      cfg.sigma_eta2 * cfg.sigma_g2;
  std::vector<double> var(cfg.T + 1);
  var[0] = cfg.theta0_var;
  for (int t = 0; t < cfg.T; ++t) var[t + 1] = var[t] + step;
  return var;
}

namespace {

// trials x (T+1) trajectory matrix, row-major per trial.
std::vector<double> simulate_trajectories(const VarianceSimConfig& cfg) {
  cfg.validate();
  const long long cells = cfg.trials * (cfg.T + 1);
  if (cells > 64'000'000LL)
    throw ParameterError(
        "trials*(T+1) too large to hold trajectories in memory; reduce one");
  std::vector<double> theta(cells);
  for (long long i = 0; i < cfg.trials; ++i) {
    double th = cfg.theta0;
    if (cfg.theta0_var > 0.0)
      th += std::sqrt(cfg.theta0_var) *
            rng::gaussian(
                rng::word(cfg.seed, rng::Stream::InitialParamDraw, i, 0),
                rng::word(cfg.seed, rng::Stream::InitialParamDraw, i, 1));
    double* row = theta.data() + i * (cfg.T + 1);
    row[0] = th;
    for (int t = 0; t < cfg.T; ++t) {
      const double eta = draw(cfg.lr_dist, cfg.mu_eta, cfg.sigma_eta2,
                              cfg.seed, rng::Stream::LearningRateDraw, i, t);
      const double g = draw(cfg.grad_dist, cfg.mu_g, cfg.sigma_g2, cfg.seed,
                            rng::Stream::GradientDraw, i, t);
      th -= eta * g;
      row[t + 1] = th;
    }
  }
  return theta;
}

std::vector<double> per_step_variance(const std::vector<double>& theta,
                                      long long trials, int T) {
  std::vector<double> var(T + 1);
  for (int t = 0; t <= T; ++t) {
    double sum = 0.0;
    for (long long i = 0; i < trials; ++i) sum += theta[i * (T + 1) + t];
    const double mean = sum / trials;
    double ss = 0.0;
    for (long long i = 0; i < trials; ++i) {
      const double d = theta[i * (T + 1) + t] - mean;
      ss += d * d;
    }
    var[t] = ss / trials;
  }
  return var;
}

}  // namespace

SimResult simulate(const VarianceSimConfig& cfg) {
  const std::vector<double> theta = simulate_trajectories(cfg);
  SimResult result;
  result.per_step_var = per_step_variance(theta, cfg.trials, cfg.T);
  double sum = 0.0;
  for (long long i = 0; i < cfg.trials; ++i)
    sum += theta[i * (cfg.T + 1) + cfg.T];
  result.empirical_mean = sum / cfg.trials;
  result.empirical_var = result.per_step_var.back();
  return result;
}

VarianceCompareReport compare(const VarianceSimConfig& cfg, double confidence,
                              int bootstrap_resamples) {
  cfg.validate();
  if (!(confidence > 0.0 && confidence < 1.0))
    throw ParameterError("confidence must lie in (0,1)");
  if (bootstrap_resamples < 2)
    throw ParameterError("bootstrap_resamples must be >= 2");
  if (cfg.trials < 1000)
    throw ParameterError(
        "compare needs >= 1000 trials for a usable bootstrap interval, got " +
        std::to_string(cfg.trials));

  const std::vector<double> theta = simulate_trajectories(cfg);
  const std::vector<double> predicted = predicted_variance(cfg);
  const std::vector<double> empirical =
      per_step_variance(theta, cfg.trials, cfg.T);

  const int T = cfg.T;
  const long long N = cfg.trials;
  const int B = bootstrap_resamples;

  // One shared resample of trial indices per bootstrap replicate; the
  // variance estimate at every step reuses it.
  std::vector<std::vector<double>> boot_var(T + 1,
                                            std::vector<double>(B, 0.0));
  std::vector<double> sum(T + 1), sumsq(T + 1);
  for (int b = 0; b < B; ++b) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(sumsq.begin(), sumsq.end(), 0.0);
    for (long long j = 0; j < N; ++j) {
      const long long pick = static_cast<long long>(
          rng::below(rng::word(cfg.seed, rng::Stream::Bootstrap, b, j),
                     static_cast<std::uint64_t>(N)));
      const double* row = theta.data() + pick * (T + 1);
      for (int t = 0; t <= T; ++t) {
        sum[t] += row[t];
        sumsq[t] += row[t] * row[t];
      }
    }
    for (int t = 0; t <= T; ++t) {
      const double mean = sum[t] / N;
      boot_var[t][b] = std::max(0.0, sumsq[t] / N - mean * mean);
    }
  }

  VarianceCompareReport report;
  report.confidence = confidence;
  const double alpha = 1.0 - confidence;
  for (int t = 0; t <= T; ++t) {
    std::vector<double> sorted = boot_var[t];
    std::sort(sorted.begin(), sorted.end());
    VarianceCompareStep step;
    step.t = t;
    step.predicted = predicted[t];
    step.empirical = empirical[t];
    step.ci_lo = percentile(sorted, alpha / 2.0);
    step.ci_hi = percentile(sorted, 1.0 - alpha / 2.0);
    report.steps.push_back(step);
  }

  const VarianceCompareStep& last = report.steps.back();
  report.consistent =
      last.predicted >= last.ci_lo && last.predicted <= last.ci_hi;

  double boot_mean = 0.0;
  for (double v : boot_var[T]) boot_mean += v;
  boot_mean /= B;
  double boot_ss = 0.0;
  for (double v : boot_var[T]) boot_ss += (v - boot_mean) * (v - boot_mean);
  const double boot_std = std::sqrt(boot_ss / B);
  if (boot_std > 0.0) {
    report.z_gap = (last.empirical - last.predicted) / boot_std;
  } else {
    report.z_gap = last.empirical == last.predicted
                       ? 0.0
                       : std::copysign(
                             std::numeric_limits<double>::infinity(),
                             last.empirical - last.predicted);
  }

  double mean_sum = 0.0;
  for (long long i = 0; i < N; ++i) mean_sum += theta[i * (T + 1) + T];
  report.empirical_mean_final = mean_sum / N;
  report.expected_mean_final = cfg.theta0 - T * cfg.mu_eta * cfg.mu_g;
  return report;
}

void write_compare_csv(const VarianceCompareReport& report,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  out << "t,predicted_var,empirical_var,ci_lo,ci_hi\n";
  for (const VarianceCompareStep& s : report.steps)
    out << s.t << "," << detail::format_double_short(s.predicted) << ","
        << detail::format_double_short(s.empirical) << ","
        << detail::format_double_short(s.ci_lo) << ","
        << detail::format_double_short(s.ci_hi) << "\n";
  if (!out) throw FileParseError(path, 0, "write failed");
}

}  // namespace lrpool
