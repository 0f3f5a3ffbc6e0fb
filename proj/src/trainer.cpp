#include "lrpool/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"
#include "nlohmann/json.hpp"
#include "text_util.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

constexpr double kDivergenceBound = 1e6;

std::vector<int> shuffled_train_order(const Dataset& data,
                                      std::uint64_t shuffle_seed, int epoch) {
  std::vector<int> order = data.train_idx;
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng::below(
        rng::word(shuffle_seed, rng::Stream::EpochShuffle, epoch, i), i + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

}  // namespace

void TrainerConfig::validate() const {
  if (batch_size < 1)
    throw ParameterError("batch_size must be >= 1, got " +
                         std::to_string(batch_size));
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ParameterError("momentum must lie in [0,1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
    throw ParameterError("label_smoothing must lie in [0,1)");
  if (snapshot_every < 0)
    throw ParameterError("snapshot_every must be >= 0");
  budget.validate();
}

std::string TrainerConfig::to_json() const {
  json j;
  j["batch_size"] = batch_size;
  j["momentum"] = momentum;
  j["label_smoothing"] = label_smoothing;
  j["shuffle_seed"] = shuffle_seed;
  j["epochs"] = budget.total_steps;
  j["snapshot_every"] = snapshot_every;
  return j.dump();
}

TrainerConfig TrainerConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  TrainerConfig cfg;
  cfg.batch_size = j.value("batch_size", 32);
  cfg.momentum = j.value("momentum", 0.9);
  cfg.label_smoothing = j.value("label_smoothing", 0.0);
  cfg.shuffle_seed = j.value("shuffle_seed", std::uint64_t{0});
  cfg.budget.total_steps = j.value("epochs", 1);
  cfg.snapshot_every = j.value("snapshot_every", 0);
  cfg.validate();
  return cfg;
}

TrainedModel train(const ModelSpec& spec, const Dataset& data,
                   const LRPolicy& policy, const TrainerConfig& cfg,
                   std::vector<EpochSnapshot>* snapshots) {
  spec.validate();
  data.validate();
  policy.validate();
  cfg.validate();
  if (data.dim != spec.layer_sizes.front())
    throw ParameterError("dataset dim " + std::to_string(data.dim) +
                         " does not match model input size " +
                         std::to_string(spec.layer_sizes.front()));
  if (data.n_classes != spec.layer_sizes.back())
    throw ParameterError("dataset n_classes does not match model output size");
  if (data.train_idx.empty())
    throw ParameterError("dataset has an empty training split");

  const int T = cfg.budget.total_steps;
  std::vector<double> params = init_parameters(spec);
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad(params.size(), 0.0);
  Workspace ws(spec);

  for (int epoch = 0; epoch < T; ++epoch) {
    const double lr = lr_at(policy, epoch, cfg.budget);
    const std::vector<int> order =
        shuffled_train_order(data, cfg.shuffle_seed, epoch);

    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + cfg.batch_size);
      const int batch_n = static_cast<int>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss_sum = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const int i = order[b];
        loss_sum += loss_and_grad(spec, params.data(), data.row(i),
                                  data.labels[i], cfg.label_smoothing, ws,
                                  grad.data());
      }
      const double batch_loss = loss_sum / batch_n;
      if (!std::isfinite(batch_loss) || batch_loss > kDivergenceBound)
        throw DivergedError(
            epoch, "training diverged at epoch " + std::to_string(epoch) +
                       " (batch loss " +
                       detail::format_double_short(batch_loss) + ", lr " +
                       detail::format_double_short(lr) + ")");
      const double inv_n = 1.0 / batch_n;
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = cfg.momentum * velocity[p] + grad[p] * inv_n;
        params[p] -= lr * velocity[p];
      }
    }

    if (snapshots && cfg.snapshot_every > 0 &&
        ((epoch + 1) % cfg.snapshot_every == 0 || epoch + 1 == T))
      snapshots->push_back({epoch, params});
  }

  TrainedModel model;
  model.spec = spec;
  model.parameters = std::move(params);
  model.policy_used = policy;
  model.final_metrics.train_loss = mean_loss(
      spec, model.parameters.data(), data, data.train_idx,
      cfg.label_smoothing);
  model.final_metrics.train_accuracy =
      split_accuracy(spec, model.parameters.data(), data, data.train_idx);
  if (!data.val_idx.empty()) {
    model.final_metrics.val_accuracy =
        split_accuracy(spec, model.parameters.data(), data, data.val_idx);
    model.final_metrics.val_loss =
        mean_loss(spec, model.parameters.data(), data, data.val_idx,
                  cfg.label_smoothing);
  }
  if (!data.test_idx.empty())
    model.final_metrics.test_accuracy =
        split_accuracy(spec, model.parameters.data(), data, data.test_idx);
  model.validate();
  return model;
}

PredictionMatrix predict_proba(const TrainedModel& model, const Dataset& data,
                               Split split, const std::string& model_id) {
  model.validate();
  data.validate();
  if (data.dim != model.spec.layer_sizes.front())
    throw ParameterError("dataset dim does not match model input size");
  const std::vector<int>& idx = data.indices(split);
  if (idx.empty())
    throw ParameterError("split '" + to_string(split) + "' is empty");

  PredictionMatrix m;
  m.model_id = model_id.empty() ? model.policy_used.label() : model_id;
  m.split_tag = to_string(split);
  m.n_samples = static_cast<int>(idx.size());
  m.n_classes = model.spec.layer_sizes.back();
  m.probs.resize(static_cast<std::size_t>(m.n_samples) * m.n_classes);

  Workspace ws(model.spec);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    forward(model.spec, model.parameters.data(), data.row(idx[r]), ws);
    std::copy(ws.acts.back().begin(), ws.acts.back().end(),
              m.probs.begin() + r * m.n_classes);
  }
  m.validate();
  return m;
}

void save_checkpoint(const TrainedModel& model, const std::string& path) {
  model.validate();
  json j;
  j["model_spec"] = json::parse(model.spec.to_json());
  j["policy"] = json::parse(model.policy_used.to_json());
  j["metrics"] = {{"train_loss", model.final_metrics.train_loss},
                  {"train_accuracy", model.final_metrics.train_accuracy},
                  {"val_accuracy", model.final_metrics.val_accuracy},
                  {"val_loss", model.final_metrics.val_loss},
                  {"test_accuracy", model.final_metrics.test_accuracy}};
  json params = json::array();
  for (double p : model.parameters) params.push_back(detail::format_double(p));
  j["parameters"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  out << j.dump(2) << "\n";
  if (!out) throw FileParseError(path, 0, "write failed");
}

TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FileParseError(path, 0, e.what());
  }
  TrainedModel model;
  try {
    model.spec = ModelSpec::from_json(j.at("model_spec").dump());
    model.policy_used = LRPolicy::from_json(j.at("policy").dump());
    const json& metrics = j.at("metrics");
    model.final_metrics.train_loss = metrics.value("train_loss", 0.0);
    model.final_metrics.train_accuracy = metrics.value("train_accuracy", 0.0);
    model.final_metrics.val_accuracy = metrics.value("val_accuracy", 0.0);
    model.final_metrics.val_loss = metrics.value("val_loss", 0.0);
    model.final_metrics.test_accuracy = metrics.value("test_accuracy", 0.0);
    for (const json& cell : j.at("parameters")) {
      double v;
      if (!detail::parse_double(cell.get<std::string>(), v))
        throw FileParseError(path, 0, "bad parameter value '" +
                                          cell.get<std::string>() + "'");
      model.parameters.push_back(v);
    }
  } catch (const json::exception& e) {
    throw FileParseError(path, 0, e.what());
  }
  model.validate();
  return model;
}

}  // namespace lrpool
