#include "lrpool/lr_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"
#include "lrpool/errors.hpp"

using namespace lrpool;

namespace {

constexpr double kPi = std::numbers::pi;

// Relative match helper for hand-derived schedule values.
void check_close(double got, double want, double rel = 1e-12) {
  if (want == 0.0) {
    CHECK(std::abs(got) <= rel);
  } else {
    CHECK(std::abs(got - want) / std::abs(want) <= rel);
  }
}

}  // namespace

TEST_CASE("multistep decays by gamma at each milestone step") {
  const LRPolicy p = make_multistep(0.1, 0.2, {0.3, 0.6, 0.8});
  const TrainingBudget T{200};
  // Milestone fractions land on steps 60, 120, 160; the boundary step
  // already carries the decayed value.
  check_close(lr_at(p, 0, T), 0.1);
  check_close(lr_at(p, 59, T), 0.1);
  check_close(lr_at(p, 60, T), 0.02);
  check_close(lr_at(p, 119, T), 0.02);
  check_close(lr_at(p, 120, T), 0.004);
  check_close(lr_at(p, 159, T), 0.004);
  check_close(lr_at(p, 160, T), 0.0008);
  check_close(lr_at(p, 199, T), 0.0008);
}

TEST_CASE("multistep is non-increasing with exactly len(l)+1 levels") {
  const LRPolicy p = make_multistep(0.1, 0.2, {0.3, 0.6, 0.8});
  const auto sched = render_schedule(p, {200});
  REQUIRE(sched.size() == 200);
  std::set<double> levels;
  for (std::size_t i = 0; i < sched.size(); ++i) {
    levels.insert(sched[i].second);
    if (i > 0) CHECK(sched[i].second <= sched[i - 1].second);
  }
  CHECK(levels.size() == 4);
}

TEST_CASE("warmup cosine ramps linearly from k1 and peaks at end of warmup") {
  const LRPolicy p = make_warmup_cosine(0.05, 0.0, 0.1);
  const TrainingBudget T{200};  // warmup = 20 steps
  check_close(lr_at(p, 0, T), 0.0);
  check_close(lr_at(p, 10, T), 0.025);
  check_close(lr_at(p, 20, T), 0.05);
  // Post-warmup half cosine: x = (t-20)/180.
  const double want_last = 0.05 * (1.0 + std::cos(kPi * 179.0 / 180.0)) / 2.0;
  check_close(lr_at(p, 199, T), want_last);

  const auto sched = render_schedule(p, T);
  double peak = 0.0;
  int argmax = -1;
  for (const auto& [t, lr] : sched)
    if (lr > peak) {
      peak = lr;
      argmax = t;
    }
  CHECK(argmax == 20);
  check_close(peak, 0.05);
  // Non-decreasing through warmup, non-increasing after.
  for (int t = 1; t < 200; ++t) {
    if (t <= 20)
      CHECK(sched[t].second >= sched[t - 1].second);
    else
      CHECK(sched[t].second <= sched[t - 1].second);
  }
}

TEST_CASE("one cycle is unimodal with peak k0 at round(wf*T)") {
  const LRPolicy p = make_one_cycle(0.1, 0.0, 0.3);
  const auto sched = render_schedule(p, {100});
  double peak = 0.0;
  int argmax = -1;
  for (const auto& [t, lr] : sched)
    if (lr > peak) {
      peak = lr;
      argmax = t;
    }
  CHECK(argmax == 30);
  check_close(peak, 0.1);
  check_close(sched[0].second, 0.0);
  for (int t = 1; t < 100; ++t) {
    if (t <= 30)
      CHECK(sched[t].second >= sched[t - 1].second);
    else
      CHECK(sched[t].second <= sched[t - 1].second);
  }
}

TEST_CASE("composite restarts at k0*gamma^s and bottoms at k1*gamma^s") {
  const LRPolicy p =
      make_composite(1.0, 0.2, 0.1, {0.45, 0.9}, {3, 2, 1});
  const TrainingBudget T{200};
  // Stage bounds: [0,90), [90,180), [180,200).
  // Stage 0: 3 cycles of 30 steps between 1.0 and 0.2.
  check_close(lr_at(p, 0, T), 1.0);
  check_close(lr_at(p, 29, T), 0.2);
  check_close(lr_at(p, 30, T), 1.0);
  check_close(lr_at(p, 59, T), 0.2);
  check_close(lr_at(p, 60, T), 1.0);
  check_close(lr_at(p, 89, T), 0.2);
  // Stage 1: 2 cycles of 45 steps between 0.1 and 0.02.
  check_close(lr_at(p, 90, T), 0.1);
  check_close(lr_at(p, 134, T), 0.02);
  check_close(lr_at(p, 135, T), 0.1);
  check_close(lr_at(p, 179, T), 0.02);
  // Stage 2: one cycle of 20 steps between 0.01 and 0.002.
  check_close(lr_at(p, 180, T), 0.01);
  check_close(lr_at(p, 199, T), 0.002);

  // Every step stays inside its stage's band.
  for (int t = 0; t < 200; ++t) {
    const int stage = t < 90 ? 0 : (t < 180 ? 1 : 2);
    const double scale = std::pow(0.1, stage);
    const double lr = lr_at(p, t, T);
    CHECK(lr >= 0.2 * scale - 1e-15);
    CHECK(lr <= 1.0 * scale + 1e-15);
  }
}

TEST_CASE("constant policy ignores t") {
  const LRPolicy p = make_constant(0.1);
  const auto sched = render_schedule(p, {3});
  REQUIRE(sched.size() == 3);
  for (const auto& [t, lr] : sched) CHECK(lr == 0.1);
}

TEST_CASE("budget of one step returns k0 for every family") {
  const std::vector<LRPolicy> policies = {
      make_multistep(0.1, 0.2, {0.3, 0.6, 0.8}),
      make_warmup_cosine(0.05, 0.0, 0.1),
      make_one_cycle(0.1, 0.0, 0.3),
      make_composite(1.0, 0.2, 0.1, {0.45, 0.9}, {3, 2, 1}),
      make_constant(0.1),
  };
  for (const LRPolicy& p : policies)
    CHECK(lr_at(p, 0, {1}) == p.peak_lr);
}

TEST_CASE("lr_at is a pure function") {
  const LRPolicy p = make_composite(0.5, 0.1, 0.1, {0.45, 0.9}, {3, 2, 1});
  for (int t : {0, 7, 89, 90, 155, 199}) {
    const double a = lr_at(p, t, {200});
    const double b = lr_at(p, t, {200});
    CHECK(a == b);  // bit-identical
  }
}

TEST_CASE("step index outside the budget is rejected") {
  const LRPolicy p = make_constant(0.1);
  CHECK_THROWS_AS(lr_at(p, 200, {200}), ParameterError);
  CHECK_THROWS_AS(lr_at(p, -1, {200}), ParameterError);
  CHECK_THROWS_AS(lr_at(p, 0, {0}), ParameterError);
}

TEST_CASE("malformed policies name the violated field") {
  CHECK_THROWS_WITH_AS(make_constant(0.0), doctest::Contains("k0"),
                       ParameterError);
  CHECK_THROWS_WITH_AS(make_warmup_cosine(0.1, 0.2, 0.1),
                       doctest::Contains("k1"), ParameterError);
  CHECK_THROWS_WITH_AS(make_multistep(0.1, 1.5, {0.5}),
                       doctest::Contains("gamma"), ParameterError);
  CHECK_THROWS_WITH_AS(make_multistep(0.1, 0.2, {0.5, 0.5}),
                       doctest::Contains("milestones"), ParameterError);
  CHECK_THROWS_WITH_AS(make_multistep(0.1, 0.2, {1.5}),
                       doctest::Contains("milestones"), ParameterError);
  CHECK_THROWS_WITH_AS(make_one_cycle(0.1, 0.0, 1.0),
                       doctest::Contains("warmup_fraction"), ParameterError);
  CHECK_THROWS_WITH_AS(
      make_composite(1.0, 0.2, 0.1, {0.45, 0.9}, {3, 2}),
      doctest::Contains("cycles_per_stage"), ParameterError);
  CHECK_THROWS_WITH_AS(
      make_composite(1.0, 0.2, 0.1, {0.45, 0.9}, {3, 0, 1}),
      doctest::Contains("cycles_per_stage"), ParameterError);
}

TEST_CASE("json round trip preserves the policy exactly") {
  const std::vector<LRPolicy> policies = {
      make_multistep(0.1, 0.2, {0.3, 0.6, 0.8}),
      make_warmup_cosine(0.05, 0.0, 0.1),
      make_one_cycle(0.4, 0.0, 0.3),
      make_composite(0.25, 0.05, 0.1, {0.45, 0.9}, {3, 2, 1}),
      make_constant(0.1),
  };
  for (const LRPolicy& p : policies) {
    const LRPolicy q = LRPolicy::from_json(p.to_json());
    CHECK(q == p);
  }
}

TEST_CASE("omitted optional json fields take the documented defaults") {
  const LRPolicy oc = LRPolicy::from_json(R"({"family":"OneCycle","k0":0.4})");
  CHECK(oc.min_lr == 0.0);
  CHECK(oc.gamma == 1.0);
  CHECK(oc.warmup_fraction == 0.3);

  const LRPolicy wc =
      LRPolicy::from_json(R"({"family":"WarmupCosineAnnealing","k0":0.2})");
  CHECK(wc.warmup_fraction == 0.1);

  CHECK_THROWS(LRPolicy::from_json(R"({"family":"NoSuch","k0":0.1})"));
  CHECK_THROWS(LRPolicy::from_json(R"({"k0":0.1})"));
}

TEST_CASE("default tuning grid covers the four families times four LRs") {
  const auto grid = default_tuning_grid();
  REQUIRE(grid.size() == 16);
  for (int i = 0; i < 4; ++i) {
    CHECK(grid[i].family == PolicyFamily::MultiStep);
    CHECK(grid[4 + i].family == PolicyFamily::OneCycle);
    CHECK(grid[8 + i].family == PolicyFamily::WarmupCosineAnnealing);
    CHECK(grid[12 + i].family == PolicyFamily::Composite);
  }
  CHECK(grid[0].peak_lr == 0.2);
  CHECK(grid[0].gamma == 0.2);
  CHECK(grid[0].milestones == std::vector<double>{0.3, 0.6, 0.8});
  CHECK(grid[4].peak_lr == 0.4);
  CHECK(grid[8].peak_lr == 0.2);
  CHECK(grid[12].peak_lr == 1.0);
  CHECK(grid[12].min_lr == 0.2);
  CHECK(grid[12].cycles_per_stage == std::vector<int>{3, 2, 1});

  // Scaled variant used by the desk suite.
  const auto scaled = default_tuning_grid(0.1);
  REQUIRE(scaled.size() == 16);
  for (int i = 0; i < 16; ++i) {
    CHECK(scaled[i].peak_lr == doctest::Approx(grid[i].peak_lr * 0.1));
    CHECK(scaled[i].min_lr == doctest::Approx(grid[i].min_lr * 0.1));
  }
}

TEST_CASE("labels are short and distinguish the families") {
  CHECK(make_multistep(0.1, 0.2, {0.5}).label() == "multistep_0.1");
  CHECK(make_one_cycle(0.4, 0.0).label() == "onecycle_0.4");
  CHECK(make_warmup_cosine(0.05, 0.0).label() == "warmcos_0.05");
  CHECK(make_constant(0.1).label() == "constant_0.1");
}
