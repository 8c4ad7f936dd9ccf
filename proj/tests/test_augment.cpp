#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vecaug/augment.hpp"

#include <algorithm>
#include <random>

using namespace vecaug;

namespace {

constexpr int kDim = 4;

struct Fixture {
  std::mt19937_64 rng{51};
  ParameterStore<float> store;
  AugmentModel<float> model{kDim, 0, store, rng};

  Parameter<float>& param(const std::string& name) {
    for (auto& p : store) {
      if (p->name == name) return *p;
    }
    throw std::runtime_error("no param " + name);
  }
};

std::vector<VecF> random_vecs(int n, std::mt19937_64& rng) {
  std::normal_distribution<float> gauss;
  std::vector<VecF> out;
  for (int i = 0; i < n; ++i) {
    VecF v(kDim);
    for (int d = 0; d < kDim; ++d) v(d) = gauss(rng);
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("identity transform leaves neighbors unchanged") {
  Fixture f;
  f.param("aug.w_aug").value = MatF::Identity(kDim, kDim);
  f.param("aug.b_aug").value.setZero();
  auto vecs = random_vecs(3, f.rng);
  Tape<float> t;
  const MatF h = t.value(f.model.transform_neighbors(t, vecs));
  for (int k = 0; k < 3; ++k) CHECK(h.col(k).isApprox(vecs[static_cast<std::size_t>(k)], 1e-6f));
}

TEST_CASE("zero weights with constant bias map every neighbor to the bias") {
  Fixture f;
  f.param("aug.w_aug").value.setZero();
  f.param("aug.b_aug").value.setConstant(0.75f);
  auto vecs = random_vecs(3, f.rng);
  Tape<float> t;
  const MatF h = t.value(f.model.transform_neighbors(t, vecs));
  CHECK(h.isApproxToConstant(0.75f));
}

TEST_CASE("random transform matches a hand matvec oracle") {
  Fixture f;
  auto vecs = random_vecs(2, f.rng);
  Tape<float> t;
  const MatF h = t.value(f.model.transform_neighbors(t, vecs));
  const MatF& w = f.param("aug.w_aug").value;
  const MatF& b = f.param("aug.b_aug").value;
  for (int k = 0; k < 2; ++k) {
    for (int r = 0; r < kDim; ++r) {
      double acc = static_cast<double>(b(r, 0));
      for (int c = 0; c < kDim; ++c) {
        acc += static_cast<double>(w(r, c)) * static_cast<double>(vecs[static_cast<std::size_t>(k)](c));
      }
      CHECK(h(r, k) == doctest::Approx(acc).epsilon(1e-5));
    }
  }
}

TEST_CASE("a single neighbor gets full attention") {
  Fixture f;
  Tape<float> t;
  MatF n(kDim, 1);
  n << 1, 2, 3, 4;
  auto h_i = t.constant(MatF::Ones(kDim, 1));
  auto [h_a, alpha] = f.model.attentive_aggregate(t, t.constant(n), h_i);
  CHECK(t.value(alpha)(0, 0) == doctest::Approx(1.0f));
  CHECK(t.value(h_a).isApprox(n, 1e-6f));
}

TEST_CASE("identical bilinear scores give uniform attention") {
  Fixture f;
  f.param("aug.w_att").value = MatF::Identity(kDim, kDim);
  Tape<float> t;
  MatF n(kDim, 2);
  n.col(0) << 1, 0, 0, 0;
  n.col(1) << 1, 0, 0, 0;
  MatF target(kDim, 1);
  target << 2, 0, 0, 0;
  auto [h_a, alpha] = f.model.attentive_aggregate(t, t.constant(n), t.constant(target));
  CHECK(t.value(alpha)(0, 0) == doctest::Approx(0.5f));
  CHECK(t.value(alpha)(0, 1) == doctest::Approx(0.5f));
}

TEST_CASE("scores of 0 and ln 3 give attention 0.25 / 0.75") {
  Fixture f;
  f.param("aug.w_att").value = MatF::Identity(kDim, kDim);
  Tape<float> t;
  // With W_att = I and target e_1, the score of neighbor k is its first
  // coordinate.
  MatF n(kDim, 2);
  n.col(0) << 0.0f, 1.0f, 0.0f, 0.0f;
  n.col(1) << std::log(3.0f), 0.0f, 1.0f, 0.0f;
  MatF target = MatF::Zero(kDim, 1);
  target(0, 0) = 1.0f;
  auto [h_a, alpha] = f.model.attentive_aggregate(t, t.constant(n), t.constant(target));
  CHECK(t.value(alpha)(0, 0) == doctest::Approx(0.25f).epsilon(1e-5));
  CHECK(t.value(alpha)(0, 1) == doctest::Approx(0.75f).epsilon(1e-5));
  const MatF want = 0.25f * n.col(0) + 0.75f * n.col(1);
  CHECK(t.value(h_a).isApprox(want, 1e-5f));
}

TEST_CASE("attention weights are a distribution and h_a stays in the hull") {
  Fixture f;
  for (int trial = 0; trial < 25; ++trial) {
    auto vecs = random_vecs(5, f.rng);
    Tape<float> t;
    auto h_n = f.model.transform_neighbors(t, vecs);
    auto h_i = t.constant(MatF::Ones(kDim, 1));
    auto [h_a, alpha] = f.model.attentive_aggregate(t, h_n, h_i);
    const MatF& a = t.value(alpha);
    float sum = 0.0f;
    for (int k = 0; k < a.cols(); ++k) {
      CHECK(a(0, k) >= 0.0f);
      sum += a(0, k);
    }
    CHECK(sum == doctest::Approx(1.0f).epsilon(1e-6));
    const MatF& h = t.value(h_n);
    const MatF& agg = t.value(h_a);
    for (int d = 0; d < kDim; ++d) {
      CHECK(agg(d, 0) >= h.row(d).minCoeff() - 1e-5f);
      CHECK(agg(d, 0) <= h.row(d).maxCoeff() + 1e-5f);
    }
  }
}

TEST_CASE("permuting neighbors permutes attention and preserves h_a") {
  Fixture f;
  auto vecs = random_vecs(4, f.rng);
  auto perm = vecs;
  std::rotate(perm.begin(), perm.begin() + 1, perm.end());

  Tape<float> t;
  auto h_i = t.constant(MatF::Ones(kDim, 1));
  auto [ha1, a1] = f.model.attentive_aggregate(t, f.model.transform_neighbors(t, vecs), h_i);
  auto [ha2, a2] = f.model.attentive_aggregate(t, f.model.transform_neighbors(t, perm), h_i);
  CHECK(t.value(ha1).isApprox(t.value(ha2), 1e-5f));
  for (int k = 0; k < 4; ++k) {
    CHECK(t.value(a1)(0, k) == doctest::Approx(t.value(a2)(0, (k + 3) % 4)).epsilon(1e-5));
  }
}

TEST_CASE("fusing with h_a = 0 reduces to the plain output head") {
  Fixture f;
  Tape<float> t;
  MatF h(kDim, 1);
  h << 0.4f, -1.0f, 2.0f, 0.0f;
  auto fused = f.model.fuse_predict(t, t.constant(h), t.zeros(kDim, 1));
  auto plain = f.model.head().logit(t, t.constant(h));
  CHECK(t.value(fused)(0, 0) == doctest::Approx(t.value(plain)(0, 0)));
}

TEST_CASE("opposite representations with zero output weights give logit 0") {
  Fixture f;
  f.param("aug.phi_main.w_out").value.setZero();
  f.param("aug.phi_main.b_out").value.setZero();
  Tape<float> t;
  MatF h(kDim, 1);
  h << 1, 2, 3, 4;
  auto z = f.model.fuse_predict(t, t.constant(h), t.constant(MatF(-h)));
  CHECK(t.value(z)(0, 0) == doctest::Approx(0.0f));
}

TEST_CASE("fuse_predict matches head-of-sum composition") {
  Fixture f;
  auto vecs = random_vecs(2, f.rng);
  Tape<float> t;
  auto z = f.model.fuse_predict(t, t.constant(vecs[0]), t.constant(vecs[1]));
  auto want = f.model.head().logit(t, t.constant(MatF(vecs[0] + vecs[1])));
  CHECK(t.value(z)(0, 0) == doctest::Approx(t.value(want)(0, 0)).epsilon(1e-6));
}

TEST_CASE("negative logits are pairwise fusions; empty input gives empty output") {
  Fixture f;
  Tape<float> t;
  auto h_i = t.constant(MatF::Ones(kDim, 1));
  CHECK(f.model.negative_logits(t, h_i, t.constant(MatF(kDim, 0))).empty());

  auto vecs = random_vecs(2, f.rng);
  auto h_neg = f.model.transform_neighbors(t, vecs);
  auto logits = f.model.negative_logits(t, h_i, h_neg);
  REQUIRE(logits.size() == 2);
  for (int k = 0; k < 2; ++k) {
    auto want = f.model.fuse_predict(t, h_i, t.col(h_neg, k));
    CHECK(t.value(logits[static_cast<std::size_t>(k)])(0, 0) ==
          doctest::Approx(t.value(want)(0, 0)));
  }
}

TEST_CASE("neighbor dimension mismatches are contract violations") {
  Fixture f;
  Tape<float> t;
  CHECK_THROWS_AS(f.model.transform_neighbors(t, {VecF::Zero(kDim + 1)}), ShapeError);
  CHECK_THROWS_AS(f.model.transform_neighbors(t, {}), ShapeError);
}
