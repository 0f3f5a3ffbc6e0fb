#include "lrpool/prediction.hpp"

#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"

using namespace lrpool;

namespace {

PredictionMatrix make_matrix(const std::string& id,
                             std::vector<double> probs, int n, int c,
                             const std::string& split = "val") {
  PredictionMatrix m;
  m.model_id = id;
  m.n_samples = n;
  m.n_classes = c;
  m.split_tag = split;
  m.probs = std::move(probs);
  m.validate();
  return m;
}

// Random row-stochastic matrix for property tests.
PredictionMatrix random_matrix(std::uint64_t seed, int n, int c,
                               const std::string& id) {
  std::vector<double> probs(static_cast<std::size_t>(n) * c);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < c; ++k) {
      const double u = rng::uniform01(
          rng::word(seed, rng::Stream::SyntheticData, i, k));
      probs[static_cast<std::size_t>(i) * c + k] = 0.05 + u;
      sum += 0.05 + u;
    }
    for (int k = 0; k < c; ++k)
      probs[static_cast<std::size_t>(i) * c + k] /= sum;
  }
  return make_matrix(id, std::move(probs), n, c);
}

}  // namespace

TEST_CASE("argmax breaks ties toward the lowest index") {
  const double row1[4] = {0.25, 0.25, 0.25, 0.25};
  CHECK(argmax_lowest(row1, 4) == 0);
  const double row2[4] = {0.1, 0.4, 0.4, 0.1};
  CHECK(argmax_lowest(row2, 4) == 1);
  const double row3[3] = {0.2, 0.3, 0.5};
  CHECK(argmax_lowest(row3, 3) == 2);
}

TEST_CASE("soft vote averages member probabilities") {
  const auto a = make_matrix("a", {1.0, 0.0, 0.0, 1.0}, 2, 2);
  const auto b = make_matrix("b", {0.0, 1.0, 0.0, 1.0}, 2, 2);
  const PredictionMatrix v = soft_vote({a, b});
  CHECK(v.model_id == "ensemble");
  CHECK(v.split_tag == "val");
  CHECK(v.at(0, 0) == doctest::Approx(0.5));
  CHECK(v.at(0, 1) == doctest::Approx(0.5));
  CHECK(v.at(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("soft vote of one member is the member itself") {
  const auto a = random_matrix(5, 40, 3, "solo");
  const PredictionMatrix v = soft_vote({a});
  CHECK(v.probs == a.probs);
}

TEST_CASE("soft vote rejects mismatched members") {
  const auto a = make_matrix("a", {1.0, 0.0}, 1, 2);
  const auto b = make_matrix("b", {1.0, 0.0, 0.0}, 1, 3);
  CHECK_THROWS_AS(soft_vote({a, b}), ParameterError);
  const auto c = make_matrix("c", {1.0, 0.0}, 1, 2, "test");
  CHECK_THROWS_AS(soft_vote({a, c}), ParameterError);
  CHECK_THROWS_AS(soft_vote({}), ParameterError);
}

TEST_CASE("majority vote picks the modal class") {
  // Three members, two favour class 1 on sample 0; unanimity on sample 1.
  const auto a = make_matrix("a", {0.9, 0.1, 0.2, 0.8}, 2, 2);
  const auto b = make_matrix("b", {0.2, 0.8, 0.3, 0.7}, 2, 2);
  const auto c = make_matrix("c", {0.4, 0.6, 0.1, 0.9}, 2, 2);
  const std::vector<int> votes = majority_vote({a, b, c});
  CHECK(votes == std::vector<int>{1, 1});
}

TEST_CASE("majority tie goes to the larger summed probability") {
  // One vote each; class 1 holds more total mass (0.8+0.4=1.2 vs 0.2+0.6).
  const auto a = make_matrix("a", {0.2, 0.8}, 1, 2);
  const auto b = make_matrix("b", {0.6, 0.4}, 1, 2);
  CHECK(majority_vote({a, b}) == std::vector<int>{1});

  // Dead heat in summed mass as well: lowest class index wins.
  const auto c = make_matrix("c", {0.4, 0.6}, 1, 2);
  const auto d = make_matrix("d", {0.6, 0.4}, 1, 2);
  CHECK(majority_vote({c, d}) == std::vector<int>{0});
}

TEST_CASE("accuracy counts argmax matches") {
  const auto m = make_matrix(
      "m", {0.9, 0.1, 0.3, 0.7, 0.5, 0.5, 0.2, 0.8}, 4, 2);
  LabeledEvalSet eval;
  eval.n_classes = 2;
  eval.labels = {0, 1, 1, 0};
  // Row 2 ties -> predicted 0, label 1 miss; row 3 predicted 1, label 0 miss.
  CHECK(accuracy(m, eval) == doctest::Approx(0.5));
  CHECK(labels_accuracy({0, 1, 0, 1}, eval) == doctest::Approx(0.5));
  LabeledEvalSet wrong;
  wrong.n_classes = 2;
  wrong.labels = {0, 1};
  CHECK_THROWS_AS(accuracy(m, wrong), ParameterError);
}

TEST_CASE("prediction csv round-trips the matrix exactly") {
  const auto m = random_matrix(9, 25, 4, "roundtrip");
  const std::string path = "./prediction_roundtrip.csv";
  write_prediction_csv(m, path);
  const PredictionMatrix r = read_prediction_csv(path);
  CHECK(r.model_id == m.model_id);
  CHECK(r.n_samples == m.n_samples);
  CHECK(r.n_classes == m.n_classes);
  CHECK(r.split_tag == m.split_tag);
  CHECK(r.probs == m.probs);  // bit-exact
  std::remove(path.c_str());
}

TEST_CASE("prediction csv rejects rows that are not a distribution") {
  const std::string path = "./prediction_bad.csv";
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("#model_id=x,n=1,c=2,split=val\n0.9,0.4\n", f);
    fclose(f);
  }
  CHECK_THROWS_AS(read_prediction_csv(path), FileParseError);
  std::remove(path.c_str());
}

TEST_CASE("labels csv round trip") {
  const std::vector<int> labels = {0, 2, 1, 1, 0, 3};
  const std::string path = "./labels_roundtrip.csv";
  write_labels_csv(labels, path);
  CHECK(read_labels_csv(path) == labels);
  std::remove(path.c_str());
}

TEST_CASE("matrix validation catches shape and mass violations") {
  PredictionMatrix m;
  m.model_id = "bad";
  m.n_samples = 1;
  m.n_classes = 2;
  m.split_tag = "val";
  m.probs = {0.7, 0.7};
  CHECK_THROWS_AS(m.validate(), ParameterError);
  m.probs = {1.2, -0.2};
  CHECK_THROWS_AS(m.validate(), ParameterError);
  m.probs = {0.5};
  CHECK_THROWS_AS(m.validate(), ParameterError);
}
