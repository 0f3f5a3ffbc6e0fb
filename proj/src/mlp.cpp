#include "lrpool/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"
#include "nlohmann/json.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

double activate(Activation a, double z) {
  return a == Activation::ReLU ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the post-activation value (valid for both
// ReLU and Tanh, which is why activations are stored post-nonlinearity).
double activate_grad(Activation a, double y) {
  return a == Activation::ReLU ? (y > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

void softmax_in_place(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "ReLU";
    case Activation::Tanh:
      return "Tanh";
  }
  throw ParameterError("unknown activation");
}

Activation activation_from_string(const std::string& name) {
  if (name == "ReLU") return Activation::ReLU;
  if (name == "Tanh") return Activation::Tanh;
  throw ParameterError("unknown activation: " + name);
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 3)
    throw ParameterError(
        "layer_sizes needs at least one hidden layer ([d, h..., C]), got " +
        std::to_string(layer_sizes.size()) + " entries");
  for (int s : layer_sizes)
    if (s < 1) throw ParameterError("layer sizes must be positive");
}

int ModelSpec::param_count() const { return layer_offset(n_layers()); }

int ModelSpec::layer_offset(int l) const {
  int off = 0;
  for (int i = 0; i < l; ++i)
    off += layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1];
  return off;
}

std::string ModelSpec::to_json() const {
  json j;
  j["layer_sizes"] = layer_sizes;
  j["activation"] = to_string(activation);
  j["init_seed"] = init_seed;
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  ModelSpec spec;
  spec.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  spec.activation =
      activation_from_string(j.value("activation", std::string("ReLU")));
  spec.init_seed = j.value("init_seed", std::uint64_t{0});
  spec.validate();
  return spec;
}

void TrainedModel::validate() const {
  spec.validate();
  if (parameters.size() != static_cast<std::size_t>(spec.param_count()))
    throw ParameterError("parameter vector length " +
                         std::to_string(parameters.size()) +
                         " does not match spec (" +
                         std::to_string(spec.param_count()) + ")");
  for (double p : parameters)
    if (!std::isfinite(p))
      throw ParameterError("model parameters contain a non-finite value");
}

std::vector<double> init_parameters(const ModelSpec& spec) {
  spec.validate();
  std::vector<double> params(spec.param_count(), 0.0);
  for (int l = 0; l < spec.n_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const int off = spec.layer_offset(l);
    const double limit = std::sqrt(6.0 / in);
    for (int k = 0; k < out * in; ++k) {
      const double u = rng::uniform01(
          rng::word(spec.init_seed, rng::Stream::WeightInit, off + k));
      params[off + k] = limit * (2.0 * u - 1.0);
    }
    // Biases (the tail of the block) stay zero.
  }
  return params;
}

Workspace::Workspace(const ModelSpec& spec) {
  acts.resize(spec.layer_sizes.size());
  for (std::size_t i = 0; i < spec.layer_sizes.size(); ++i)
    acts[i].resize(spec.layer_sizes[i]);
  deltas.resize(spec.n_layers());
  for (int l = 0; l < spec.n_layers(); ++l)
    deltas[l].resize(spec.layer_sizes[l + 1]);
}

void forward(const ModelSpec& spec, const double* params, const double* x,
             Workspace& ws) {
  const int L = spec.n_layers();
  std::copy(x, x + spec.layer_sizes[0], ws.acts[0].begin());
  for (int l = 0; l < L; ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double* W = params + spec.layer_offset(l);
    const double* b = W + out * in;
    const std::vector<double>& src = ws.acts[l];
    std::vector<double>& dst = ws.acts[l + 1];
    for (int o = 0; o < out; ++o) {
      double z = b[o];
      const double* w_row = W + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += w_row[i] * src[i];
      dst[o] = (l + 1 == L) ? z : activate(spec.activation, z);
    }
  }
  softmax_in_place(ws.acts[L]);
}

double loss_and_grad(const ModelSpec& spec, const double* params,
                     const double* x, int label, double label_smoothing,
                     Workspace& ws, double* grad_accum) {
  const int L = spec.n_layers();
  const int C = spec.layer_sizes[L];
  forward(spec, params, x, ws);
  const std::vector<double>& probs = ws.acts[L];

  const double off_target = label_smoothing / C;
  double loss = 0.0;
  for (int c = 0; c < C; ++c) {
    const double q = off_target + (c == label ? 1.0 - label_smoothing : 0.0);
    if (q > 0.0) loss -= q * std::log(probs[c]);
    ws.deltas[L - 1][c] = probs[c] - q;  // d(loss)/d(logit)
  }

  for (int l = L - 1; l >= 0; --l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double* W = params + spec.layer_offset(l);
    double* gW = grad_accum + spec.layer_offset(l);
    double* gb = gW + out * in;
    const std::vector<double>& src = ws.acts[l];
    const std::vector<double>& delta = ws.deltas[l];
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      double* g_row = gW + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) g_row[i] += d * src[i];
      gb[o] += d;
    }
    if (l > 0) {
      std::vector<double>& prev = ws.deltas[l - 1];
      for (int i = 0; i < in; ++i) {
        double s = 0.0;
        for (int o = 0; o < out; ++o) s += W[static_cast<std::size_t>(o) * in + i] * delta[o];
        prev[i] = s * activate_grad(spec.activation, src[i]);
      }
    }
  }
  return loss;
}

double mean_loss(const ModelSpec& spec, const double* params,
                 const Dataset& data, const std::vector<int>& idx,
                 double label_smoothing) {
  if (idx.empty()) throw ParameterError("mean_loss over an empty index set");
  Workspace ws(spec);
  const int L = spec.n_layers();
  const int C = spec.layer_sizes[L];
  const double off_target = label_smoothing / C;
  double total = 0.0;
  for (int i : idx) {
    forward(spec, params, data.row(i), ws);
    const std::vector<double>& probs = ws.acts[L];
    for (int c = 0; c < C; ++c) {
      const double q =
          off_target + (c == data.labels[i] ? 1.0 - label_smoothing : 0.0);
      if (q > 0.0) total -= q * std::log(probs[c]);
    }
  }
  return total / static_cast<double>(idx.size());
}

double split_accuracy(const ModelSpec& spec, const double* params,
                      const Dataset& data, const std::vector<int>& idx) {
  if (idx.empty())
    throw ParameterError("split_accuracy over an empty index set");
  Workspace ws(spec);
  int correct = 0;
  for (int i : idx) {
    forward(spec, params, data.row(i), ws);
    if (argmax_lowest(ws.acts.back()) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

GradCheckReport gradient_check(const ModelSpec& spec, const Dataset& data,
                               double tolerance) {
  spec.validate();
  data.validate();
  if (data.dim != spec.layer_sizes.front())
    throw ParameterError("dataset dim does not match model input size");

  constexpr double kStep = 1e-6;
  constexpr double kSmoothing = 0.1;
  std::vector<int> idx = data.train_idx;
  if (idx.size() > 32) idx.resize(32);
  if (idx.empty()) throw ParameterError("no training samples for gradient check");

  std::vector<double> params = init_parameters(spec);
  std::vector<double> grad(params.size(), 0.0);
  Workspace ws(spec);
  for (int i : idx)
    loss_and_grad(spec, params.data(), data.row(i), data.labels[i], kSmoothing,
                  ws, grad.data());
  const double scale = 1.0 / static_cast<double>(idx.size());
  for (double& g : grad) g *= scale;

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = params[p];
    params[p] = saved + kStep;
    const double up = mean_loss(spec, params.data(), data, idx, kSmoothing);
    params[p] = saved - kStep;
    const double down = mean_loss(spec, params.data(), data, idx, kSmoothing);
    params[p] = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double rel = std::abs(grad[p] - numeric) /
                       std::max(std::abs(grad[p]) + std::abs(numeric), 1e-8);
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = static_cast<int>(p);
      report.analytic_at_worst = grad[p];
      report.numeric_at_worst = numeric;
    }
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

double parameter_cosine(const TrainedModel& a, const TrainedModel& b,
                        bool exclude_output_layer) {
  // Only the shape has to agree; comparing runs that differ in init seed
  // (or even activation) is the whole point of the measure.
  if (a.spec.layer_sizes != b.spec.layer_sizes)
    throw ParameterError("parameter_cosine requires matching layer sizes");
  a.validate();
  b.validate();
  const int end = exclude_output_layer
                      ? a.spec.layer_offset(a.spec.n_layers() - 1)
                      : a.spec.param_count();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < end; ++i) {
    dot += a.parameters[i] * b.parameters[i];
    na += a.parameters[i] * a.parameters[i];
    nb += b.parameters[i] * b.parameters[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw ParameterError("parameter_cosine of a zero parameter vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace lrpool
