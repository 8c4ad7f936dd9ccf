#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vecaug/metrics.hpp"

#include <cmath>
#include <random>

using namespace vecaug;

namespace {

/// All-pairs oracle: fraction of (pos, neg) pairs ranked correctly, ties 0.5.
double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double good = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        good += 1.0;
      } else if (scores[i] == scores[j]) {
        good += 0.5;
      }
    }
  }
  return good / pairs;
}

}  // namespace

TEST_CASE("auc worked examples") {
  CHECK(auc({0.9, 0.1}, {1, 0}) == doctest::Approx(1.0));
  CHECK(auc({0.5, 0.5, 0.5}, {1, 0, 1}) == doctest::Approx(0.5));
  CHECK(auc({0.8, 0.6, 0.4, 0.2}, {1, 0, 1, 0}) == doctest::Approx(0.75));
}

TEST_CASE("auc rejects single-class input") {
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), InputError);
  CHECK_THROWS_AS(auc({0.1, 0.2}, {0, 0}), InputError);
  CHECK_THROWS_AS(auc({}, {}), InputError);
}

TEST_CASE("auc equals the all-pairs oracle on random instances") {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> n_dist(2, 500);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Quantized scores create plenty of ties.
  std::uniform_int_distribution<int> quant(0, 9);
  int done = 0;
  while (done < 100) {
    const int n = n_dist(rng);
    std::vector<double> scores;
    std::vector<int> labels;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      scores.push_back(quant(rng) / 10.0);
      labels.push_back(unif(rng) < 0.3 ? 1 : 0);
      pos += labels.back();
    }
    if (pos == 0 || pos == n) continue;
    CHECK(auc(scores, labels) == doctest::Approx(auc_oracle(scores, labels)).epsilon(1e-12));
    ++done;
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  std::mt19937_64 rng(72);
  std::normal_distribution<double> gauss;
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    scores.push_back(gauss(rng));
    labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  const double base = auc(scores, labels);
  auto transformed = scores;
  for (double& s : transformed) s = std::exp(0.5 * s) + 3.0;
  CHECK(auc(transformed, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("recall at precision worked examples") {
  // Perfectly separated scores.
  CHECK(recall_at_precision({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}, 0.9) == doctest::Approx(1.0));
  // No prefix reaches the precision bar.
  CHECK(recall_at_precision({0.9, 0.8}, {0, 1}, 0.9) == doctest::Approx(0.0));
  // Descending-label pattern [1,1,1,1,0,1,0,0,0,0]: depth 4 has precision 1
  // and recall 0.8; deeper prefixes fall below precision 0.9.
  std::vector<double> scores;
  std::vector<int> labels{1, 1, 1, 1, 0, 1, 0, 0, 0, 0};
  for (int i = 0; i < 10; ++i) scores.push_back(1.0 - 0.05 * i);
  CHECK(recall_at_precision(scores, labels, 0.9) == doctest::Approx(0.8));
}

TEST_CASE("recall at precision is non-increasing in p") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) {
    const int y = unif(rng) < 0.2 ? 1 : 0;
    labels.push_back(y);
    scores.push_back(0.5 * unif(rng) + 0.4 * y);
  }
  double prev = 1.0;
  for (double p = 0.1; p <= 1.0; p += 0.1) {
    const double r = recall_at_precision(scores, labels, p);
    CHECK(r <= prev + 1e-12);
    prev = r;
  }
}

TEST_CASE("tie groups are taken whole") {
  // Three tied top scores (two positives, one negative): the tie group is
  // indivisible, so precision at its depth is 2/3 < 0.9 and nothing qualifies.
  CHECK(recall_at_precision({0.9, 0.9, 0.9, 0.1}, {1, 1, 0, 0}, 0.9) == doctest::Approx(0.0));
  // Lowering the bar admits the group.
  CHECK(recall_at_precision({0.9, 0.9, 0.9, 0.1}, {1, 1, 0, 0}, 0.6) == doctest::Approx(1.0));
}

TEST_CASE("operating threshold matches the qualifying prefix") {
  std::vector<double> scores{0.9, 0.8, 0.7, 0.2};
  std::vector<int> labels{1, 1, 0, 0};
  // Depth 2 (scores >= 0.8) has precision 1.0 and recall 1.0.
  CHECK(precision_operating_threshold(scores, labels, 0.9) == doctest::Approx(0.8));
  // Nothing qualifies: threshold is +infinity.
  CHECK(std::isinf(precision_operating_threshold({0.9, 0.8}, {0, 1}, 0.9)));
}

TEST_CASE("recall at precision requires a positive") {
  CHECK_THROWS_AS(recall_at_precision({0.5}, {0}, 0.9), InputError);
}
