#include "lrpool/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"
#include "nlohmann/json.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

std::string join_sizes(const std::vector<int>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(sizes[i]);
  }
  return out;
}

}  // namespace

void TaskConfig::validate() const {
  if (task_id.empty()) throw ParameterError("task_id must not be empty");
  if (csv_path.empty()) {
    if (n < n_classes)
      throw ParameterError("synthetic dataset needs n >= n_classes");
    if (noise < 0.0) throw ParameterError("noise must be non-negative");
  }
  model.validate();
  trainer.validate();
}

Dataset TaskConfig::build_dataset() const {
  validate();
  if (!csv_path.empty()) return load_csv(csv_path, data_seed);
  return generate_synthetic(kind, n, d, n_classes, noise, data_seed);
}

std::string TaskConfig::effective_dataset_id() const {
  if (!dataset_id.empty()) return dataset_id;
  if (!csv_path.empty())
    return std::filesystem::path(csv_path).stem().string();
  return to_string(kind) + "_n" + std::to_string(n) + "_c" +
         std::to_string(n_classes);
}

std::string TaskConfig::effective_model_spec_id() const {
  if (!model_spec_id.empty()) return model_spec_id;
  return "mlp_" + join_sizes(model.layer_sizes);
}

std::string TaskConfig::to_json() const {
  json j;
  j["task_id"] = task_id;
  json ds;
  if (!csv_path.empty()) {
    ds["csv"] = csv_path;
  } else {
    ds["kind"] = to_string(kind);
    ds["n"] = n;
    ds["d"] = d;
    ds["n_classes"] = n_classes;
    ds["noise"] = noise;
  }
  ds["seed"] = data_seed;
  j["dataset"] = std::move(ds);
  if (!dataset_id.empty()) j["dataset_id"] = dataset_id;
  j["model"] = json::parse(model.to_json());
  if (!model_spec_id.empty()) j["model_spec_id"] = model_spec_id;
  j["trainer"] = json::parse(trainer.to_json());
  return j.dump();
}

TaskConfig TaskConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  TaskConfig task;
  task.task_id = j.at("task_id").get<std::string>();
  const json& ds = j.at("dataset");
  if (ds.contains("csv")) {
    task.csv_path = ds.at("csv").get<std::string>();
  } else {
    task.kind = synthetic_kind_from_string(ds.at("kind").get<std::string>());
    task.n = ds.at("n").get<int>();
    task.d = ds.value("d", 2);
    task.n_classes = ds.value("n_classes", 2);
    task.noise = ds.value("noise", 0.0);
  }
  task.data_seed = ds.value("seed", std::uint64_t{0});
  task.dataset_id = j.value("dataset_id", std::string{});
  task.model = ModelSpec::from_json(j.at("model").dump());
  task.model_spec_id = j.value("model_spec_id", std::string{});
  task.trainer = TrainerConfig::from_json(j.at("trainer").dump());
  task.validate();
  return task;
}

std::string RunLayout::checkpoint_path(const std::string& model_id) const {
  return checkpoints_dir() + "/" + model_id + ".ckpt.json";
}

std::string RunLayout::prediction_path(const std::string& model_id,
                                       Split split) const {
  return predictions_dir() + "/" + model_id + "_" + to_string(split) + ".csv";
}

std::string RunLayout::labels_path(Split split) const {
  return predictions_dir() + "/labels_" + to_string(split) + ".csv";
}

void RunLayout::prepare() const {
  if (run_dir.empty()) throw ParameterError("run_dir must not be empty");
  std::filesystem::create_directories(checkpoints_dir());
  std::filesystem::create_directories(predictions_dir());
  std::filesystem::create_directories(reports_dir());
}

namespace {

std::vector<int> split_labels(const Dataset& data, Split split) {
  std::vector<int> out;
  for (int i : data.indices(split)) out.push_back(data.labels[i]);
  return out;
}

struct PlannedTrial {
  LRPolicy policy;
  std::uint64_t seed = 0;
  std::string trial_id;
  std::string model_id;
};

TrialRecord execute_trial(const PlannedTrial& plan, const TaskConfig& task,
                          const Dataset& data, const RunLayout& layout) {
  TrialRecord record;
  record.trial_id = plan.trial_id;
  record.policy = plan.policy;
  record.seed = plan.seed;
  record.task_id = task.task_id;
  record.dataset_id = task.effective_dataset_id();
  record.model_spec_id = task.effective_model_spec_id();
  record.model_id = plan.model_id;

  // Same trial seed -> same initialization for every policy; only the
  // schedule differs across the pool.
  ModelSpec spec = task.model;
  spec.init_seed = rng::word(task.model.init_seed, plan.seed);
  TrainerConfig cfg = task.trainer;
  cfg.shuffle_seed = rng::word(task.trainer.shuffle_seed, plan.seed);

  const auto started = std::chrono::steady_clock::now();
  try {
    TrainedModel model = train(spec, data, plan.policy, cfg);
    record.val_accuracy = model.final_metrics.val_accuracy;
    record.test_accuracy = model.final_metrics.test_accuracy;
    record.val_loss = model.final_metrics.val_loss;
    record.train_loss = model.final_metrics.train_loss;
    record.checkpoint_path = layout.checkpoint_path(plan.model_id);
    save_checkpoint(model, record.checkpoint_path);
    record.prediction_path = layout.prediction_path(plan.model_id, Split::Val);
    write_prediction_csv(predict_proba(model, data, Split::Val, plan.model_id),
                         record.prediction_path);
    record.test_prediction_path =
        layout.prediction_path(plan.model_id, Split::Test);
    write_prediction_csv(
        predict_proba(model, data, Split::Test, plan.model_id),
        record.test_prediction_path);
  } catch (const DivergedError& e) {
    record.status = "failed";
    record.error_text = e.what();
  }
  record.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return record;
}

}  // namespace

SearchOutcome run_search(const TuningSpec& spec, const TaskConfig& task,
                         const RunLayout& layout, int jobs) {
  spec.validate();
  task.validate();
  if (jobs < 1) throw ParameterError("jobs must be >= 1");
  layout.prepare();

  const Dataset data = task.build_dataset();
  write_labels_csv(split_labels(data, Split::Val),
                   layout.labels_path(Split::Val));
  write_labels_csv(split_labels(data, Split::Test),
                   layout.labels_path(Split::Test));

  std::map<std::string, TrialRecord> existing;
  if (std::filesystem::exists(layout.trials_path()))
    for (TrialRecord& r : load_trials(layout.trials_path()))
      existing.emplace(r.trial_id, std::move(r));

  const auto pairs = search_pairs(spec);
  std::vector<PlannedTrial> plans;          // unique pairs, execution order
  std::map<std::string, int> plan_of_id;    // trial_id -> index into plans
  std::map<std::string, int> label_count;
  for (const auto& [p, s] : pairs) {
    const LRPolicy& policy = spec.candidate_policies[p];
    const std::uint64_t seed = spec.seeds[s];
    const std::string tid = make_trial_id(policy, seed, spec.task_id);
    if (plan_of_id.count(tid)) continue;  // random search can repeat a pair
    plan_of_id[tid] = static_cast<int>(plans.size());
    plans.push_back({policy, seed, tid, {}});
    ++label_count[policy.label() + "_s" + std::to_string(seed)];
  }
  for (PlannedTrial& plan : plans) {
    plan.model_id = plan.policy.label() + "_s" + std::to_string(plan.seed);
    if (label_count[plan.model_id] > 1)
      plan.model_id += "_" + plan.trial_id.substr(0, 8);
  }

  // Only pairs without a successful record need work.
  std::vector<int> to_run;
  SearchOutcome outcome;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto it = existing.find(plans[i].trial_id);
    if (it != existing.end() && it->second.status == "success")
      ++outcome.skipped;
    else
      to_run.push_back(static_cast<int>(i));
  }

  std::vector<TrialRecord> fresh(plans.size());
  const int workers =
      std::max(1, std::min(jobs, static_cast<int>(to_run.size())));
  if (workers <= 1) {
    for (int i : to_run)
      fresh[i] = execute_trial(plans[i], task, data, layout);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w)
      threads.emplace_back([&, w] {
        for (std::size_t j = w; j < to_run.size(); j += workers)
          fresh[to_run[j]] =
              execute_trial(plans[to_run[j]], task, data, layout);
      });
    for (std::thread& t : threads) t.join();
  }

  // Serialize appends in plan order so the database is independent of jobs.
  for (int i : to_run) {
    append_trial(layout.trials_path(), fresh[i]);
    if (fresh[i].status == "failed") ++outcome.failed;
  }

  for (const auto& [p, s] : pairs) {
    const std::string tid = make_trial_id(spec.candidate_policies[p],
                                          spec.seeds[s], spec.task_id);
    const int idx = plan_of_id.at(tid);
    const auto it = existing.find(tid);
    if (it != existing.end() && it->second.status == "success")
      outcome.records.push_back(it->second);
    else
      outcome.records.push_back(fresh[idx]);
  }
  return outcome;
}

namespace {

// Records keep whatever path the producing run wrote, which may have been
// relative to a different working directory. If it no longer resolves, try
// the file's canonical spot inside this run before letting the reader fail.
std::string resolve_run_file(const RunLayout& layout,
                             const std::string& stored) {
  namespace fs = std::filesystem;
  if (fs::exists(stored)) return stored;
  const fs::path fallback =
      fs::path(layout.predictions_dir()) / fs::path(stored).filename();
  if (fs::exists(fallback)) return fallback.string();
  return stored;
}

}  // namespace

LoadedPools load_pools(const RunLayout& layout,
                       const std::vector<TrialRecord>& records) {
  LoadedPools pools;
  for (const TrialRecord& r : records) {
    if (r.status != "success") continue;
    pools.val.add(
        read_prediction_csv(resolve_run_file(layout, r.prediction_path)));
    pools.test.add(
        read_prediction_csv(resolve_run_file(layout, r.test_prediction_path)));
  }
  if (pools.val.ids.empty())
    throw EmptyResultError("no successful trials with prediction files");
  pools.val.eval.labels = read_labels_csv(layout.labels_path(Split::Val));
  pools.val.eval.n_classes = pools.val.members[0].n_classes;
  pools.test.eval.labels = read_labels_csv(layout.labels_path(Split::Test));
  pools.test.eval.n_classes = pools.test.members[0].n_classes;
  pools.val.validate();
  pools.test.validate();
  return pools;
}

TuneConfig TuneConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  TuneConfig cfg;
  cfg.task = TaskConfig::from_json(j.at("task").dump());
  if (j.contains("policies")) {
    for (const json& p : j.at("policies"))
      cfg.spec.candidate_policies.push_back(LRPolicy::from_json(p.dump()));
  } else if (j.contains("policy_grid")) {
    cfg.spec.candidate_policies =
        default_tuning_grid(j.at("policy_grid").value("lr_scale", 1.0));
  } else {
    throw ParameterError("tune config needs 'policies' or 'policy_grid'");
  }
  cfg.spec.task_id = cfg.task.task_id;
  cfg.spec.seeds = j.value("seeds", std::vector<std::uint64_t>{0});
  cfg.spec.search =
      search_kind_from_string(j.value("search", std::string("grid")));
  cfg.spec.n_samples = j.value("n_samples", 0);
  cfg.spec.search_seed = j.value("search_seed", std::uint64_t{0});
  cfg.spec.validate();
  return cfg;
}

TuneConfig load_tune_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  try {
    return TuneConfig::from_json(text);
  } catch (const json::exception& e) {
    throw FileParseError(path, 0, e.what());
  }
}

TuneConfig desk_suite_config() {
  TuneConfig cfg;
  cfg.task.task_id = "desk_spirals";
  cfg.task.kind = SyntheticKind::Spirals;
  cfg.task.n = 2000;
  cfg.task.d = 2;
  cfg.task.n_classes = 2;
  cfg.task.noise = 0.25;
  cfg.task.data_seed = 42;
  cfg.task.model.layer_sizes = {2, 32, 32, 2};
  cfg.task.model.activation = Activation::ReLU;
  cfg.task.model.init_seed = 1;
  cfg.task.trainer.batch_size = 32;
  cfg.task.trainer.momentum = 0.9;
  cfg.task.trainer.label_smoothing = 0.1;
  cfg.task.trainer.shuffle_seed = 3;
  // Long enough that the smallest grid LRs still converge; the interesting
  // spread should come from schedule shape, not from starving the slow ones.
  cfg.task.trainer.budget.total_steps = 200;
  cfg.spec.task_id = cfg.task.task_id;
  cfg.spec.candidate_policies = default_tuning_grid(0.1);
  cfg.spec.seeds = {0};
  cfg.spec.search = SearchKind::Grid;
  return cfg;
}

}  // namespace lrpool
