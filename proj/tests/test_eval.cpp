#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "questcnn/errors.hpp"
#include "questcnn/eval.hpp"

using namespace questcnn;

TEST_SUITE("eval") {

TEST_CASE("metrics by hand") {
  // gold: 0 0 0 1 1 2 ; pred: 0 0 1 1 2 2
  const std::vector<std::size_t> gold = {0, 0, 0, 1, 1, 2}, pred = {0, 0, 1, 1, 2, 2};
  const auto m = compute_metrics(gold, pred, 3, {"a", "b", "c"});
  CHECK(m.precision[0] == 1.0);
  CHECK(m.recall[0] == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1[0] == doctest::Approx(0.8));
  CHECK(m.precision[1] == 0.5);
  CHECK(m.recall[1] == 0.5);
  CHECK(m.precision[2] == 0.5);
  CHECK(m.recall[2] == 1.0);
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(m.micro_f1 == m.accuracy);
  CHECK(m.confusion[0][1] == 1);
  CHECK(m.support == std::vector<std::size_t>{3, 2, 1});
}

TEST_CASE("empty classes score zero rather than NaN") {
  const std::vector<std::size_t> gold = {0, 0}, pred = {0, 0};
  const auto m = compute_metrics(gold, pred, 2);
  CHECK(m.precision[1] == 0.0);
  CHECK(m.f1[1] == 0.0);
}

TEST_CASE("metrics CSV layout") {
  const std::vector<std::size_t> gold = {0, 1}, pred = {0, 0};
  std::ostringstream out;
  write_metrics_csv(out, compute_metrics(gold, pred, 2, {"question", "non_question"}));
  const auto s = out.str();
  CHECK(s.rfind("class,", 0) == 0);
  CHECK(s.find("micro") != std::string::npos);
  CHECK(s.find("0.6667") != std::string::npos);
}

TEST_CASE("sampled configurations stay within bounds") {
  HpoBounds b;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto c = sample_config(b, QuestCNNConfig{}, rng);
    CHECK(c.lr >= b.lr_min);
    CHECK(c.lr <= b.lr_max);
    CHECK(c.dropout <= b.dropout_max);
    CHECK(c.feature_maps >= b.feature_maps_min);
    CHECK(c.feature_maps <= b.feature_maps_max);
    CHECK(c.hidden_size >= b.hidden_min);
    CHECK(c.hidden_size <= b.hidden_max);
    CHECK(std::find(b.batch_sizes.begin(), b.batch_sizes.end(), c.batch_size) != b.batch_sizes.end());
  }
}

TEST_CASE("search results are ranked and reproducible") {
  auto objective = [](const QuestCNNConfig& c) { return -std::abs(std::log10(c.lr) + 3.0); };
  const auto a = hpo_search(HpoBounds{}, QuestCNNConfig{}, 10, 7, objective);
  const auto b = hpo_search(HpoBounds{}, QuestCNNConfig{}, 10, 7, objective);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].val_f1 >= a[i].val_f1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].index == b[i].index);
    CHECK(a[i].val_f1 == b[i].val_f1);
  }
  std::ostringstream t1, t2;
  write_trials_csv(t1, a);
  write_trials_csv(t2, b);
  CHECK(t1.str() == t2.str());
}

TEST_CASE("EVP of a small list by hand") {
  // {0.2, 0.5, 0.9}: E[max of 1] = mean, E[max of 2] = (0.5+0.9+0.9)/3, max of 3 = 0.9.
  const std::vector<double> v = {0.5, 0.2, 0.9};
  const auto c = expected_validation_performance(v, EvpMethod::exact);
  REQUIRE(c.size() == 3);
  CHECK(c[0].mean == doctest::Approx(1.6 / 3));
  CHECK(c[1].mean == doctest::Approx(2.3 / 3));
  CHECK(c[2].mean == doctest::Approx(0.9));
  CHECK(c[2].sd == doctest::Approx(0.0));
}

TEST_CASE("bootstrap EVP is close to exact and deterministic") {
  Rng rng(9);
  std::vector<double> v(10);
  for (auto& x : v) x = rng.uniform(0, 1);
  const auto exact = expected_validation_performance(v, EvpMethod::exact);
  const auto boot = expected_validation_performance(v, EvpMethod::bootstrap, 4000, 1);
  const auto boot2 = expected_validation_performance(v, EvpMethod::bootstrap, 4000, 1);
  for (std::size_t j = 0; j < v.size(); ++j) {
    CHECK(boot[j].mean == doctest::Approx(exact[j].mean).epsilon(0.02));
    CHECK(boot[j].mean == boot2[j].mean);
  }
  CHECK_THROWS(expected_validation_performance(std::vector<double>{}, EvpMethod::exact));
}

TEST_CASE("EVP CSV layout") {
  std::ostringstream out;
  write_evp_csv(out, expected_validation_performance(std::vector<double>{0.25, 0.75}));
  CHECK(out.str() == "trials,expected_max,sd\n1,0.500000,0.250000\n2,0.750000,0.000000\n");
}

TEST_CASE("ablation matrix names") {
  const auto without = default_ablation_matrix(QuestCNNConfig{}, false);
  const auto with = default_ablation_matrix(QuestCNNConfig{}, true);
  CHECK(with.size() == without.size() + 2);
  auto has = [](const std::vector<NamedConfig>& m, const std::string& n) {
    return std::any_of(m.begin(), m.end(), [&](const NamedConfig& c) { return c.name == n; });
  };
  CHECK(has(without, "CNN-rand"));
  CHECK(has(with, "CNN-static"));
  CHECK(has(with, "CNN-non-static"));
  CHECK_FALSE(has(without, "CNN-static"));
}

TEST_CASE("mean and population sd") {
  const std::vector<double> v = {1, 2, 3, 4};
  CHECK(mean_of(v) == 2.5);
  CHECK(sd_of(v) == doctest::Approx(std::sqrt(1.25)));
}

}  // TEST_SUITE
