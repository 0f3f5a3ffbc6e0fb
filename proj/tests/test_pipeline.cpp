#include "lrpool/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"

using namespace lrpool;
namespace fs = std::filesystem;

namespace {

// Small fast task: 200 spiral points, a 2x16x2 net, 8 epochs.
TaskConfig small_task(const std::string& task_id = "unit_task") {
  TaskConfig task;
  task.task_id = task_id;
  task.kind = SyntheticKind::Spirals;
  task.n = 200;
  task.d = 2;
  task.n_classes = 2;
  task.noise = 0.2;
  task.data_seed = 5;
  task.model.layer_sizes = {2, 16, 2};
  task.model.activation = Activation::ReLU;
  task.model.init_seed = 1;
  task.trainer.batch_size = 32;
  task.trainer.momentum = 0.9;
  task.trainer.label_smoothing = 0.1;
  task.trainer.shuffle_seed = 3;
  task.trainer.budget.total_steps = 8;
  return task;
}

TuningSpec small_spec(const std::string& task_id = "unit_task") {
  TuningSpec spec;
  spec.task_id = task_id;
  spec.candidate_policies = {make_constant(0.05),
                            make_one_cycle(0.05, 0.0, 0.3),
                            make_warmup_cosine(0.05, 0.0, 0.1)};
  spec.seeds = {0};
  return spec;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::path(".") / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("task config json round trip, including id defaults") {
  const TaskConfig task = small_task();
  const TaskConfig back = TaskConfig::from_json(task.to_json());
  CHECK(back.task_id == task.task_id);
  CHECK(back.kind == task.kind);
  CHECK(back.n == task.n);
  CHECK(back.noise == task.noise);
  CHECK(back.data_seed == task.data_seed);
  CHECK(back.model == task.model);
  CHECK(back.trainer.budget.total_steps == 8);

  CHECK(task.effective_dataset_id() == "spirals_n200_c2");
  CHECK(task.effective_model_spec_id() == "mlp_2x16x2");

  TaskConfig named = small_task();
  named.dataset_id = "my_data";
  named.model_spec_id = "my_net";
  CHECK(named.effective_dataset_id() == "my_data");
  CHECK(named.effective_model_spec_id() == "my_net");

  TaskConfig from_csv = small_task();
  from_csv.csv_path = "/tmp/some_table.csv";
  CHECK(from_csv.effective_dataset_id() == "some_table");
}

TEST_CASE("run layout puts artifacts in conventional places") {
  RunLayout layout{"runs/demo"};
  CHECK(layout.trials_path() == "runs/demo/trials.jsonl");
  CHECK(layout.checkpoint_path("m1") == "runs/demo/checkpoints/m1.ckpt.json");
  CHECK(layout.prediction_path("m1", Split::Val) ==
        "runs/demo/predictions/m1_val.csv");
  CHECK(layout.labels_path(Split::Test) ==
        "runs/demo/predictions/labels_test.csv");
}

TEST_CASE("search trains every pair and records artifacts") {
  TempDir dir("run_search_basic");
  RunLayout layout{dir.path.string()};
  const SearchOutcome outcome = run_search(small_spec(), small_task(), layout);

  REQUIRE(outcome.records.size() == 3);
  CHECK(outcome.skipped == 0);
  CHECK(outcome.failed == 0);
  std::set<std::string> model_ids;
  for (const TrialRecord& r : outcome.records) {
    CHECK(r.status == "success");
    CHECK(r.val_accuracy >= 0.0);
    CHECK(fs::exists(r.checkpoint_path));
    CHECK(fs::exists(r.prediction_path));
    CHECK(fs::exists(r.test_prediction_path));
    CHECK(r.wall_time_seconds > 0.0);
    model_ids.insert(r.model_id);
  }
  CHECK(model_ids.size() == 3);  // labels are distinct, no hash suffix needed
  CHECK(fs::exists(layout.labels_path(Split::Val)));
  CHECK(fs::exists(layout.labels_path(Split::Test)));

  const auto db = load_trials(layout.trials_path());
  CHECK(db.size() == 3);
}

TEST_CASE("rerunning a finished search skips all work") {
  TempDir dir("run_search_skip");
  RunLayout layout{dir.path.string()};
  run_search(small_spec(), small_task(), layout);
  const SearchOutcome again = run_search(small_spec(), small_task(), layout);
  CHECK(again.skipped == 3);
  CHECK(again.records.size() == 3);
  for (const TrialRecord& r : again.records) CHECK(r.status == "success");
  // No duplicate lines were appended.
  CHECK(load_trials(layout.trials_path()).size() == 3);
}

TEST_CASE("failed trials are recorded and the search continues") {
  TuningSpec spec = small_spec("diverge_task");
  spec.candidate_policies.push_back(make_constant(1e6));  // will diverge
  TempDir dir("run_search_fail");
  RunLayout layout{dir.path.string()};
  const SearchOutcome outcome =
      run_search(spec, small_task("diverge_task"), layout);
  CHECK(outcome.records.size() == 4);
  CHECK(outcome.failed == 1);
  int failed = 0;
  for (const TrialRecord& r : outcome.records)
    if (r.status == "failed") {
      ++failed;
      CHECK(r.error_text.find("diverged") != std::string::npos);
      CHECK(r.checkpoint_path.empty());
    }
  CHECK(failed == 1);

  // The failed pair is retried on the next run (and fails again).
  const SearchOutcome again =
      run_search(spec, small_task("diverge_task"), layout);
  CHECK(again.skipped == 3);
  CHECK(again.failed == 1);
}

TEST_CASE("parallel jobs produce the identical database") {
  TempDir dir1("run_jobs1");
  TempDir dir2("run_jobs4");
  RunLayout l1{dir1.path.string()};
  RunLayout l2{dir2.path.string()};
  const SearchOutcome a = run_search(small_spec(), small_task(), l1, 1);
  const SearchOutcome b = run_search(small_spec(), small_task(), l2, 4);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].trial_id == b.records[i].trial_id);
    CHECK(a.records[i].val_accuracy == b.records[i].val_accuracy);
    CHECK(a.records[i].test_accuracy == b.records[i].test_accuracy);
  }
  // Databases match line for line apart from wall times.
  const auto da = load_trials(l1.trials_path());
  const auto db = load_trials(l2.trials_path());
  REQUIRE(da.size() == db.size());
  for (std::size_t i = 0; i < da.size(); ++i) {
    CHECK(da[i].trial_id == db[i].trial_id);
    CHECK(da[i].val_accuracy == db[i].val_accuracy);
  }
}

TEST_CASE("one shared trial seed gives every policy the same init") {
  TaskConfig task = small_task("init_check");
  task.trainer.budget.total_steps = 1;
  TuningSpec spec;
  spec.task_id = "init_check";
  spec.candidate_policies = {make_constant(1e-12), make_constant(0.05)};
  spec.seeds = {0};
  TempDir dir("run_init_check");
  RunLayout layout{dir.path.string()};
  const SearchOutcome outcome = run_search(spec, task, layout);
  REQUIRE(outcome.records.size() == 2);

  // The derived init seed is a pure function of (base seed, trial seed), so
  // both policies trained from the same parameter vector.
  const std::uint64_t derived_seed = rng::word(task.model.init_seed, 0);
  const TrainedModel frozen =
      load_checkpoint(outcome.records[0].checkpoint_path);
  const TrainedModel moved =
      load_checkpoint(outcome.records[1].checkpoint_path);
  CHECK(frozen.spec.init_seed == derived_seed);
  CHECK(moved.spec.init_seed == derived_seed);

  // A vanishing LR leaves parameters at that shared initialization.
  ModelSpec derived = task.model;
  derived.init_seed = derived_seed;
  const std::vector<double> shared_init = init_parameters(derived);
  for (std::size_t i = 0; i < shared_init.size(); ++i)
    CHECK(frozen.parameters[i] == doctest::Approx(shared_init[i]));
}

TEST_CASE("pools rebuild from prediction files and score identically") {
  TempDir dir("run_pools");
  RunLayout layout{dir.path.string()};
  const SearchOutcome outcome = run_search(small_spec(), small_task(), layout);
  const LoadedPools pools = load_pools(layout, outcome.records);
  CHECK(pools.val.size() == 3);
  CHECK(pools.test.size() == 3);
  CHECK(pools.val.eval.labels.size() ==
        pools.val.members[0].probs.size() / 2);

  // Pool member accuracy equals the recorded trial accuracy.
  for (const TrialRecord& r : outcome.records) {
    const double pool_acc =
        accuracy(pools.val.member(r.model_id), pools.val.eval);
    CHECK(pool_acc == doctest::Approx(r.val_accuracy));
  }

  const std::vector<TrialRecord> none;
  CHECK_THROWS_AS(load_pools(layout, none), EmptyResultError);
}

TEST_CASE("tune config json accepts a policy list or the standard grid") {
  const std::string with_grid = R"({
    "task": {"task_id": "t", "dataset": {"kind": "spirals", "n": 100},
             "model": {"layer_sizes": [2, 8, 2]},
             "trainer": {"epochs": 3}},
    "policy_grid": {"lr_scale": 0.1},
    "seeds": [0, 1]
  })";
  const TuneConfig grid_cfg = TuneConfig::from_json(with_grid);
  CHECK(grid_cfg.spec.candidate_policies.size() == 16);
  CHECK(grid_cfg.spec.seeds == std::vector<std::uint64_t>{0, 1});
  CHECK(grid_cfg.spec.task_id == "t");
  CHECK(grid_cfg.spec.candidate_policies[0].peak_lr ==
        doctest::Approx(0.02));  // 0.2 * 0.1

  const std::string with_list = R"({
    "task": {"task_id": "t2", "dataset": {"kind": "blobs", "n": 60},
             "model": {"layer_sizes": [2, 8, 2]},
             "trainer": {"epochs": 2}},
    "policies": [{"family": "Constant", "k0": 0.1}]
  })";
  const TuneConfig list_cfg = TuneConfig::from_json(with_list);
  CHECK(list_cfg.spec.candidate_policies.size() == 1);
  CHECK(list_cfg.spec.candidate_policies[0].family == PolicyFamily::Constant);

  CHECK_THROWS_AS(
      TuneConfig::from_json(
          R"({"task": {"task_id": "x", "dataset": {"kind": "blobs", "n": 60},
              "model": {"layer_sizes": [2, 8, 2]}, "trainer": {"epochs": 1}}})"),
      ParameterError);
}

TEST_CASE("the pinned desk suite is the documented 16-policy spiral run") {
  const TuneConfig cfg = desk_suite_config();
  CHECK(cfg.task.task_id == "desk_spirals");
  CHECK(cfg.task.n == 2000);
  CHECK(cfg.task.kind == SyntheticKind::Spirals);
  CHECK(cfg.spec.candidate_policies.size() == 16);
  CHECK(cfg.task.model.layer_sizes == std::vector<int>{2, 32, 32, 2});
  // LRs are the stock tuning grid scaled down once.
  CHECK(cfg.spec.candidate_policies[0].peak_lr == doctest::Approx(0.02));
  CHECK(cfg.spec.candidate_policies[12].peak_lr == doctest::Approx(0.1));
}
