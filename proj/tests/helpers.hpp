#pragma once

// Shared test utilities: finite-difference gradient checking against the
// double-precision instantiation of the differentiable core, and a builder
// for a small end-to-end loss covering every objective path.

#include "vecaug/augment.hpp"
#include "vecaug/encoder.hpp"
#include "vecaug/objectives.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

using vecaug::Mat;
using vecaug::ParameterStore;
using vecaug::Tape;
using MatD = Mat<double>;
using VarD = Tape<double>::Var;

/// Max relative error between analytic gradients and central finite
/// differences, over every entry of every parameter in the store. The build
/// callback must construct the scalar loss from scratch on the given tape.
inline double max_rel_grad_err(ParameterStore<double>& store,
                               const std::function<VarD(Tape<double>&)>& build,
                               double h = 1e-5) {
  Tape<double> t;
  store.zero_grads();
  t.backward(build(t));
  std::vector<MatD> analytic;
  for (const auto& p : store) analytic.push_back(p->grad);

  auto eval = [&]() {
    Tape<double> tt;
    return static_cast<double>(tt.scalar(build(tt)));
  };

  double worst = 0.0;
  std::size_t pi = 0;
  for (auto& p : store) {
    for (int r = 0; r < p->value.rows(); ++r) {
      for (int c = 0; c < p->value.cols(); ++c) {
        const double orig = p->value(r, c);
        const double step = h * std::max(1.0, std::abs(orig));
        p->value(r, c) = orig + step;
        const double fp = eval();
        p->value(r, c) = orig - step;
        const double fm = eval();
        p->value(r, c) = orig;
        const double fd = (fp - fm) / (2.0 * step);
        const double ga = analytic[pi](r, c);
        const double denom = std::max(std::abs(ga), std::abs(fd));
        if (denom < 1e-8) continue;  // both effectively zero
        worst = std::max(worst, std::abs(ga - fd) / denom);
      }
    }
    ++pi;
  }
  return worst;
}

/// Builds a tiny two-sample model exercising the full loss surface — encoder,
/// neighbor transform, bilinear attention, fusion, BCE, separation, and
/// alignment — and returns the worst finite-difference error over all
/// parameters. Dimensions stay <= 8.
inline double full_path_grad_err(std::uint64_t seed, vecaug::EncoderKind kind) {
  std::mt19937_64 rng(seed);
  vecaug::EncoderConfig cfg;
  cfg.vocab_size = 7;
  cfg.embed_dim = 4;
  cfg.kind = kind;
  cfg.mlp_hidden = 3;
  cfg.max_len = 8;
  cfg.head_depth = 1;

  ParameterStore<double> store;
  vecaug::SequenceEncoder<double> encoder(cfg, "g", store, rng);
  vecaug::AugmentModel<double> augment(cfg.embed_dim, cfg.head_depth, store, rng);

  std::uniform_int_distribution<int> tok(0, cfg.vocab_size - 1);
  std::uniform_int_distribution<int> len(2, 6);
  std::vector<std::vector<int>> seqs(2);
  for (auto& s : seqs) {
    s.resize(static_cast<std::size_t>(len(rng)));
    for (int& x : s) x = tok(rng);
  }
  const std::vector<int> labels{1, 0};

  std::normal_distribution<float> gauss(0.0f, 1.0f);
  auto rand_vec = [&] {
    vecaug::VecF v(cfg.embed_dim);
    for (int i = 0; i < v.size(); ++i) v(i) = gauss(rng);
    return v;
  };
  std::vector<vecaug::VecF> aug_neighbors{rand_vec(), rand_vec(), rand_vec()};
  std::vector<vecaug::VecF> neg_neighbors{rand_vec(), rand_vec()};
  MatD e_batch(cfg.embed_dim, 2);
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < cfg.embed_dim; ++r) e_batch(r, c) = gauss(rng);
  }

  auto build = [&](Tape<double>& t) {
    std::vector<const std::vector<int>*> ptrs{&seqs[0], &seqs[1]};
    auto h_all = encoder.encode_batch(t, ptrs);
    auto h0 = t.col(h_all, 0);
    auto h1 = t.col(h_all, 1);

    // Sample 0 goes through the full cohort path, sample 1 through the
    // empty-cohort fallback.
    auto h_nb = augment.transform_neighbors(t, aug_neighbors);
    auto [h_a, alpha] = augment.attentive_aggregate(t, h_nb, h0);
    auto z0 = augment.fuse_predict(t, h0, h_a);
    auto z1 = augment.head().logit(t, h1);
    auto logits = t.hstack({z0, z1});
    auto main = t.bce_with_logits(logits, labels);

    auto h_neg = augment.transform_neighbors(t, neg_neighbors);
    auto neg_logits = augment.negative_logits(t, h0, h_neg);
    auto d_a = vecaug::dis<double>(t, labels[0], z0);
    std::vector<VarD> d_negs;
    for (auto zk : neg_logits) d_negs.push_back(vecaug::dis<double>(t, labels[0], zk));
    auto sccl = vecaug::sccl_sample<double>(t, d_a, d_negs, 0.7);

    auto align = vecaug::align_loss<double>(t, h_all, e_batch);

    // Deliberately large weights so every path contributes to the gradient.
    return t.add(main, t.add(t.scale(sccl, 0.3), t.scale(align, 0.2)));
  };

  return max_rel_grad_err(store, build);
}

}  // namespace testutil
