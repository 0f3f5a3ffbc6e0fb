#include "lrpool/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "lrpool/errors.hpp"

using namespace lrpool;

namespace {

Dataset spiral_data(int n = 400, std::uint64_t seed = 42) {
  return generate_synthetic(SyntheticKind::Spirals, n, 2, 2, 0.2, seed);
}

ModelSpec small_net(std::uint64_t init_seed = 1) {
  ModelSpec spec;
  spec.layer_sizes = {2, 16, 16, 2};
  spec.activation = Activation::ReLU;
  spec.init_seed = init_seed;
  return spec;
}

TrainerConfig quick_cfg(int epochs = 20) {
  TrainerConfig cfg;
  cfg.batch_size = 32;
  cfg.momentum = 0.9;
  cfg.label_smoothing = 0.1;
  cfg.shuffle_seed = 3;
  cfg.budget.total_steps = epochs;
  return cfg;
}

}  // namespace

TEST_CASE("training is bit-deterministic under a fixed seed pair") {
  const Dataset d = spiral_data();
  const LRPolicy p = make_warmup_cosine(0.05, 0.0, 0.1);
  const TrainedModel a = train(small_net(), d, p, quick_cfg());
  const TrainedModel b = train(small_net(), d, p, quick_cfg());
  CHECK(a.parameters == b.parameters);  // element-for-element identical
  CHECK(a.final_metrics.val_accuracy == b.final_metrics.val_accuracy);

  // A different shuffle seed takes a different path.
  TrainerConfig other = quick_cfg();
  other.shuffle_seed = 4;
  const TrainedModel c = train(small_net(), d, p, other);
  CHECK(a.parameters != c.parameters);
}

TEST_CASE("a trained net beats the trivial classifier on spirals") {
  const Dataset d = spiral_data(600);
  const LRPolicy p = make_one_cycle(0.2, 0.0, 0.3);
  const TrainedModel m = train(small_net(), d, p, quick_cfg(60));
  CHECK(m.final_metrics.train_accuracy > 0.8);
  CHECK(m.final_metrics.val_accuracy > 0.6);
  CHECK(m.final_metrics.test_accuracy > 0.6);
  CHECK(m.final_metrics.train_loss < std::log(2.0));
}

TEST_CASE("oversized learning rates trip the divergence guard") {
  const Dataset d = spiral_data();
  const LRPolicy p = make_constant(1e6);
  try {
    train(small_net(), d, p, quick_cfg(5));
    FAIL("expected DivergedError");
  } catch (const DivergedError& e) {
    CHECK(e.epoch() < 5);
    CHECK(std::string(e.what()).find("lr") != std::string::npos);
  }
}

TEST_CASE("snapshots record the requested epochs plus the final one") {
  const Dataset d = spiral_data(200);
  const LRPolicy p = make_constant(0.01);
  TrainerConfig cfg = quick_cfg(5);
  cfg.snapshot_every = 2;
  std::vector<EpochSnapshot> snaps;
  const TrainedModel m = train(small_net(), d, p, cfg, &snaps);
  REQUIRE(snaps.size() == 3);  // after epochs 2, 4, and the final 5th
  CHECK(snaps[0].epoch == 1);
  CHECK(snaps[1].epoch == 3);
  CHECK(snaps[2].epoch == 4);
  CHECK(snaps.back().parameters == m.parameters);
}

TEST_CASE("shape mismatches are rejected up front") {
  const Dataset d = spiral_data(100);
  ModelSpec wrong_in = small_net();
  wrong_in.layer_sizes = {3, 8, 2};
  CHECK_THROWS_AS(train(wrong_in, d, make_constant(0.01), quick_cfg(1)),
                  ParameterError);
  ModelSpec wrong_out = small_net();
  wrong_out.layer_sizes = {2, 8, 5};
  CHECK_THROWS_AS(train(wrong_out, d, make_constant(0.01), quick_cfg(1)),
                  ParameterError);
}

TEST_CASE("empty held-out splits leave their metrics at zero") {
  Dataset d = spiral_data(100);
  d.train_idx.insert(d.train_idx.end(), d.val_idx.begin(), d.val_idx.end());
  d.train_idx.insert(d.train_idx.end(), d.test_idx.begin(), d.test_idx.end());
  std::sort(d.train_idx.begin(), d.train_idx.end());
  d.val_idx.clear();
  d.test_idx.clear();
  const TrainedModel m =
      train(small_net(), d, make_constant(0.01), quick_cfg(2));
  CHECK(m.final_metrics.val_accuracy == 0.0);
  CHECK(m.final_metrics.val_loss == 0.0);
  CHECK(m.final_metrics.test_accuracy == 0.0);
}

TEST_CASE("predict_proba is row-stochastic and tags the split") {
  const Dataset d = spiral_data();
  const LRPolicy p = make_constant(0.02);
  const TrainedModel m = train(small_net(), d, p, quick_cfg(5));
  const PredictionMatrix probs = predict_proba(m, d, Split::Val);
  probs.validate();
  CHECK(probs.n_samples == static_cast<int>(d.val_idx.size()));
  CHECK(probs.n_classes == 2);
  CHECK(probs.split_tag == "val");
  CHECK(probs.model_id == p.label());  // defaults to the policy label
  const PredictionMatrix named = predict_proba(m, d, Split::Test, "m0");
  CHECK(named.model_id == "m0");
}

TEST_CASE("checkpoint save/load round-trips parameters bit-exactly") {
  const Dataset d = spiral_data(200);
  const LRPolicy p = make_one_cycle(0.04, 0.0, 0.3);
  const TrainedModel m = train(small_net(7), d, p, quick_cfg(8));
  const std::string path = "./trainer_ckpt_roundtrip.json";
  save_checkpoint(m, path);
  const TrainedModel r = load_checkpoint(path);
  CHECK(r.spec == m.spec);
  CHECK(r.policy_used == m.policy_used);
  CHECK(r.parameters == m.parameters);  // decimal-string precision suffices
  CHECK(r.final_metrics.val_accuracy == m.final_metrics.val_accuracy);
  std::remove(path.c_str());
}

TEST_CASE("trainer config json round trip") {
  TrainerConfig cfg = quick_cfg(15);
  cfg.snapshot_every = 5;
  const TrainerConfig back = TrainerConfig::from_json(cfg.to_json());
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.momentum == cfg.momentum);
  CHECK(back.label_smoothing == cfg.label_smoothing);
  CHECK(back.shuffle_seed == cfg.shuffle_seed);
  CHECK(back.budget.total_steps == cfg.budget.total_steps);
  CHECK(back.snapshot_every == cfg.snapshot_every);
  CHECK_THROWS_AS(TrainerConfig::from_json(R"({"batch_size":0})"),
                  ParameterError);
}
