#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coral/data.hpp"
#include "coral/matrix.hpp"

using namespace coral;

TEST_CASE("csv loading parses features and labels") {
  std::istringstream in("1.0,2.0,1\n0.5,0.1,3\n2.2,0.9,2\n");
  const Dataset ds = load_csv(in, {.num_ranks = 3}, "inline");
  CHECK(ds.size() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.features.at(0, 1) == 2.0);
  CHECK(ds.features.at(2, 0) == 2.2);
  CHECK(ds.labels == std::vector<int>{1, 3, 2});
  CHECK(ds.ranks.num_ranks() == 3);
  CHECK(ds.provenance == "inline");
}

TEST_CASE("csv loading honors the header flag") {
  std::istringstream in("f0,f1,label\n1.0,2.0,1\n");
  const Dataset ds = load_csv(in, {.num_ranks = 3, .has_header = true}, "inline");
  CHECK(ds.size() == 1);

  std::istringstream no_header("f0,f1,label\n1.0,2.0,1\n");
  CHECK_THROWS(load_csv(no_header, {.num_ranks = 3}, "inline"));
}

TEST_CASE("csv loading reports precise errors") {
  std::istringstream out_of_range("1.0,2.0,0\n");
  try {
    load_csv(out_of_range, {.num_ranks = 3}, "inline");
    FAIL("expected range error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("label 0") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }

  std::istringstream empty("");
  CHECK_THROWS(load_csv(empty, {.num_ranks = 3}, "inline"));

  std::istringstream ragged("1.0,2.0,1\n0.5,3\n");
  try {
    load_csv(ragged, {.num_ranks = 3}, "inline");
    FAIL("expected ragged-row error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::istringstream junk("1.0,zap,1\n");
  try {
    load_csv(junk, {.num_ranks = 3}, "inline");
    FAIL("expected cell error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 1") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }

  std::istringstream frac_label("1.0,2.0,1.5\n");
  CHECK_THROWS(load_csv(frac_label, {.num_ranks = 3}, "inline"));
}

TEST_CASE("csv save/load round trip preserves every double") {
  const Dataset ds = generate_synthetic({.seed = 5, .n = 60, .dim = 3, .num_ranks = 4, .noise_sd = 0.2});
  std::ostringstream out;
  save_csv(ds, out);
  std::istringstream in(out.str());
  const Dataset back = load_csv(in, {.num_ranks = 4}, "roundtrip");
  CHECK(back.features.data == ds.features.data);
  CHECK(back.labels == ds.labels);
}

TEST_CASE("split is an exact deterministic partition") {
  Dataset ds;
  ds.features = Matrix(10, 2);
  ds.labels.resize(10);
  ds.ranks = RankSpec::numeric(2);
  for (int i = 0; i < 10; ++i) {
    ds.features.at(i, 0) = i;
    ds.features.at(i, 1) = 0.5 * i - 2.0;
    ds.labels[static_cast<std::size_t>(i)] = 1 + i % 2;
  }
  SplitPlan plan;
  plan.train_fraction = 0.6;
  plan.val_fraction = 0.2;
  plan.test_fraction = 0.2;
  plan.seed = 0;

  const Splits s = split(ds, plan);
  CHECK(s.train.size() == 6);
  CHECK(s.validation.size() == 2);
  CHECK(s.test.size() == 2);

  // Disjoint union recovers the source rows exactly (features are unique
  // with probability 1, so compare row multisets).
  std::multiset<std::string> original, pieces;
  auto row_key = [](const Dataset& d, int i) {
    std::ostringstream os;
    for (int c = 0; c < d.dim(); ++c) os << d.features.at(i, c) << '|';
    os << d.labels[static_cast<std::size_t>(i)];
    return os.str();
  };
  for (int i = 0; i < ds.size(); ++i) original.insert(row_key(ds, i));
  for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
    for (int i = 0; i < part->size(); ++i) pieces.insert(row_key(*part, i));
  }
  CHECK(original == pieces);

  const Splits again = split(ds, plan);
  CHECK(again.train.features.data == s.train.features.data);
  CHECK(again.validation.labels == s.validation.labels);
  CHECK(again.test.features.data == s.test.features.data);

  const SplitPlan other{0.6, 0.2, 0.2, 99};
  const Splits moved = split(ds, other);
  CHECK(moved.train.features.data != s.train.features.data);
}

TEST_CASE("split rejects empty shares and bad fractions") {
  const Dataset tiny = generate_synthetic({.seed = 2, .n = 20, .dim = 1, .num_ranks = 2, .noise_sd = 0.0});
  Dataset three = tiny;
  three.features = Matrix(3, 1);
  three.labels = {1, 2, 1};
  for (int i = 0; i < 3; ++i) three.features.at(i, 0) = i;

  CHECK_THROWS_AS(split(three, SplitPlan{0.8, 0.1, 0.1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(split(tiny, SplitPlan{0.5, 0.0, 0.5, 0}), std::invalid_argument);
  CHECK_THROWS_AS(split(tiny, SplitPlan{0.5, 0.2, 0.2, 0}), std::invalid_argument);
}

TEST_CASE("standardizer uses population statistics from the training split only") {
  Dataset train;
  train.features = Matrix(2, 1);
  train.features.at(0, 0) = 1.0;
  train.features.at(1, 0) = 3.0;
  train.labels = {1, 2};
  train.ranks = RankSpec::numeric(2);

  const Standardizer st = Standardizer::fit(train);
  CHECK(st.mean == std::vector<double>{2.0});
  CHECK(st.scale == std::vector<double>{1.0});  // population convention: sd of {1,3} is 1

  const Dataset norm_train = st.apply(train);
  CHECK(norm_train.features.at(0, 0) == -1.0);
  CHECK(norm_train.features.at(1, 0) == 1.0);

  // Other splits reuse the train statistics verbatim; a value equal to the
  // train mean maps to 0 no matter what the other split looks like.
  Dataset test;
  test.features = Matrix(3, 1);
  test.features.at(0, 0) = 2.0;
  test.features.at(1, 0) = 100.0;
  test.features.at(2, 0) = -100.0;
  test.labels = {1, 1, 2};
  test.ranks = RankSpec::numeric(2);
  const Dataset norm_test = st.apply(test);
  CHECK(norm_test.features.at(0, 0) == 0.0);
  CHECK(norm_test.features.at(1, 0) == 98.0);
  CHECK(norm_test.features.at(2, 0) == -102.0);
}

TEST_CASE("standardizer zeroes constant columns and records them") {
  Dataset train;
  train.features = Matrix(3, 2);
  for (int i = 0; i < 3; ++i) {
    train.features.at(i, 0) = 7.5;  // constant
    train.features.at(i, 1) = i;
  }
  train.labels = {1, 2, 1};
  train.ranks = RankSpec::numeric(2);

  const Standardizer st = Standardizer::fit(train);
  CHECK(st.zero_variance_columns == std::vector<int>{0});
  const Dataset norm = st.apply(train);
  for (int i = 0; i < 3; ++i) CHECK(norm.features.at(i, 0) == 0.0);
}

TEST_CASE("synthetic generator is deterministic and well-posed") {
  const SyntheticConfig cfg{.seed = 0, .n = 2000, .dim = 4, .num_ranks = 6, .noise_sd = 0.1};
  std::vector<double> scores;
  const Dataset a = generate_synthetic(cfg, &scores);
  const Dataset b = generate_synthetic(cfg);
  CHECK(a.features.data == b.features.data);
  CHECK(a.labels == b.labels);
  CHECK(static_cast<int>(scores.size()) == a.size());

  std::vector<int> rank_count(7, 0);
  for (int y : a.labels) ++rank_count[static_cast<std::size_t>(y)];
  for (int q = 1; q <= 6; ++q) CHECK(rank_count[static_cast<std::size_t>(q)] > 0);
  int below = 0;
  for (int k = 1; k <= 5; ++k) {
    below += rank_count[static_cast<std::size_t>(k)];
    CHECK(below > 0);
    CHECK(below < a.size());
  }
  CHECK_NOTHROW(validate_dataset(a));
}

TEST_CASE("noiseless synthetic labels are a monotone function of the latent score") {
  std::vector<double> t;
  const Dataset ds = generate_synthetic({.seed = 3, .n = 300, .dim = 3, .num_ranks = 5, .noise_sd = 0.0}, &t);

  // With zero noise the score is exactly w*.x, so sorting by score must sort
  // the labels; the implied threshold model then reproduces every label.
  std::vector<int> order(static_cast<std::size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return t[static_cast<std::size_t>(i)] < t[static_cast<std::size_t>(j)];
  });
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    CHECK(ds.labels[static_cast<std::size_t>(order[i])] <=
          ds.labels[static_cast<std::size_t>(order[i + 1])]);
  }

  const std::vector<double> w = synthetic_latent_direction(3);
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(dot(ds.features.row(i), w) == doctest::Approx(t[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("synthetic generator validates its arguments") {
  CHECK_THROWS_AS(generate_synthetic({.seed = 0, .n = 30, .dim = 2, .num_ranks = 6, .noise_sd = 0.1}),
                  std::invalid_argument);  // n < 10K
  CHECK_THROWS_AS(generate_synthetic({.seed = 0, .n = 100, .dim = 0, .num_ranks = 4, .noise_sd = 0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic({.seed = 0, .n = 100, .dim = 2, .num_ranks = 4, .noise_sd = -1.0}),
                  std::invalid_argument);
}
