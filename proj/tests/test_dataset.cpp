#include "lrpool/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>

#include "doctest.h"
#include "lrpool/errors.hpp"

using namespace lrpool;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("./") + name;
}

}  // namespace

TEST_CASE("synthetic data is balanced, shaped, and deterministic") {
  for (SyntheticKind kind : {SyntheticKind::Blobs, SyntheticKind::Spirals}) {
    const Dataset a = generate_synthetic(kind, 300, 2, 3, 0.2, 7);
    a.validate();
    CHECK(a.n_samples == 300);
    CHECK(a.dim == 2);
    CHECK(a.n_classes == 3);
    int counts[3] = {0, 0, 0};
    for (int y : a.labels) counts[y]++;
    CHECK(counts[0] == 100);
    CHECK(counts[1] == 100);
    CHECK(counts[2] == 100);

    const Dataset b = generate_synthetic(kind, 300, 2, 3, 0.2, 7);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);

    const Dataset c = generate_synthetic(kind, 300, 2, 3, 0.2, 8);
    CHECK(a.features != c.features);
  }
}

TEST_CASE("noise scale zero gives exact class geometry") {
  const Dataset d = generate_synthetic(SyntheticKind::Blobs, 30, 2, 3, 0.0, 1);
  // Blob centers sit on a radius-5 circle, so every point has norm 5.
  for (int i = 0; i < d.n_samples; ++i) {
    const double* x = d.row(i);
    CHECK(x[0] * x[0] + x[1] * x[1] == doctest::Approx(25.0));
  }
}

TEST_CASE("split partition is disjoint, sized, and seed-stable") {
  Dataset d = generate_synthetic(SyntheticKind::Spirals, 1000, 2, 2, 0.2, 3);
  assign_split(d, 11);
  d.validate();
  CHECK(d.test_idx.size() == 200);   // 0.2 held out
  CHECK(d.val_idx.size() == 80);     // 10% of the remaining 800
  CHECK(d.train_idx.size() == 720);

  std::set<int> all;
  for (const auto* idx : {&d.train_idx, &d.val_idx, &d.test_idx}) {
    CHECK(std::is_sorted(idx->begin(), idx->end()));
    all.insert(idx->begin(), idx->end());
  }
  CHECK(all.size() == 1000);  // disjoint and covering

  Dataset e = generate_synthetic(SyntheticKind::Spirals, 1000, 2, 2, 0.2, 3);
  assign_split(e, 11);
  CHECK(d.train_idx == e.train_idx);
  CHECK(d.val_idx == e.val_idx);
  CHECK(d.test_idx == e.test_idx);

  assign_split(e, 12);
  CHECK(d.train_idx != e.train_idx);
}

TEST_CASE("indices accessor maps the three split names") {
  Dataset d = generate_synthetic(SyntheticKind::Blobs, 100, 2, 2, 0.1, 5);
  assign_split(d, 1);
  CHECK(&d.indices(Split::Train) == &d.train_idx);
  CHECK(&d.indices(Split::Val) == &d.val_idx);
  CHECK(&d.indices(Split::Test) == &d.test_idx);
  CHECK(split_from_string("train") == Split::Train);
  CHECK(split_from_string("val") == Split::Val);
  CHECK(split_from_string("test") == Split::Test);
  CHECK(to_string(Split::Val) == "val");
  CHECK_THROWS_AS(split_from_string("dev"), ParameterError);
}

TEST_CASE("csv round trip reproduces features exactly") {
  Dataset d = generate_synthetic(SyntheticKind::Spirals, 120, 2, 2, 0.3, 9);
  assign_split(d, 4);
  const std::string path = temp_path("dataset_roundtrip.csv");
  save_csv(d, path);
  const Dataset r = load_csv(path, 4);
  CHECK(r.n_samples == d.n_samples);
  CHECK(r.dim == d.dim);
  CHECK(r.n_classes == d.n_classes);
  CHECK(r.features == d.features);  // bit-exact via 17 significant digits
  CHECK(r.labels == d.labels);
  CHECK(r.train_idx == d.train_idx);
  std::remove(path.c_str());
}

TEST_CASE("malformed csv reports the offending line") {
  const std::string path = temp_path("dataset_bad.csv");
  {
    FILE* f = fopen(path.c_str(), "w");
    fputs("f0,f1,label\n1.0,2.0,0\nnot_a_number,2.0,1\n", f);
    fclose(f);
  }
  try {
    load_csv(path, 0);
    FAIL("expected FileParseError");
  } catch (const FileParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("degenerate generation requests are rejected") {
  CHECK_THROWS_AS(generate_synthetic(SyntheticKind::Blobs, 1, 2, 2, 0.1, 0),
                  ParameterError);
  CHECK_THROWS_AS(generate_synthetic(SyntheticKind::Blobs, 10, 1, 2, 0.1, 0),
                  ParameterError);
  CHECK_THROWS_AS(generate_synthetic(SyntheticKind::Blobs, 10, 2, 1, 0.1, 0),
                  ParameterError);
  CHECK_THROWS_AS(generate_synthetic(SyntheticKind::Blobs, 10, 2, 2, -0.1, 0),
                  ParameterError);
  Dataset d = generate_synthetic(SyntheticKind::Blobs, 10, 2, 2, 0.1, 0);
  CHECK_THROWS_AS(assign_split(d, 0, 1.5), ParameterError);
}
