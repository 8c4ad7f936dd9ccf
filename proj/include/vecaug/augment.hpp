#pragma once

#include "vecaug/encoder.hpp"

#include <utility>
#include <vector>

namespace vecaug {

/// Cohort augmentation head: neighbor transformation into the augmented
/// representation space, bilinear attentive aggregation, summation fusion,
/// and negative-neighbor logits. The same W_aug/b_aug transform serves both
/// augmentation and negative neighbors.
template <class Scalar>
class AugmentModel {
 public:
  using Var = typename Tape<Scalar>::Var;

  AugmentModel(int n_d, int head_depth, ParameterStore<Scalar>& store, std::mt19937_64& rng)
      : n_d_(n_d),
        w_aug_(&store.add_xavier("aug.w_aug", n_d, n_d, rng)),
        b_aug_(&store.add("aug.b_aug", n_d, 1)),
        w_att_(&store.add_xavier("aug.w_att", n_d, n_d, rng)),
        head_("aug.phi_main", n_d, head_depth, store, rng) {}

  int dim() const { return n_d_; }
  const OutputHead<Scalar>& head() const { return head_; }

  /// H = W_aug E + b_aug, column per neighbor, order preserved.
  Var transform_neighbors(Tape<Scalar>& t, const std::vector<VecF>& neighbors) const {
    if (neighbors.empty()) throw ShapeError("transform_neighbors: empty neighbor set");
    Mat<Scalar> e(n_d_, static_cast<int>(neighbors.size()));
    for (std::size_t k = 0; k < neighbors.size(); ++k) {
      if (neighbors[k].size() != n_d_) {
        throw ShapeError("transform_neighbors: neighbor dim mismatch");
      }
      e.col(static_cast<int>(k)) = neighbors[k].template cast<Scalar>();
    }
    return transform(t, t.constant(std::move(e)));
  }

  Var transform(Tape<Scalar>& t, Var e_cols) const {
    return t.add_colwise(t.matmul(t.param(*w_aug_), e_cols), t.param(*b_aug_));
  }

  /// Bilinear attention over the columns of h_neighbors. Returns the
  /// aggregated vector and the 1xK attention row.
  std::pair<Var, Var> attentive_aggregate(Tape<Scalar>& t, Var h_neighbors, Var h_target) const {
    if (t.value(h_neighbors).cols() < 1) {
      throw ShapeError("attentive_aggregate: need at least one neighbor");
    }
    // scores_k = h_k^T W_att h_i, assembled as a 1xK row for row-softmax.
    auto scores = t.transpose(t.matmul(t.transpose(h_neighbors),
                                       t.matmul(t.param(*w_att_), h_target)));
    auto alpha = t.softmax_rows(scores);
    auto aggregated = t.matmul(h_neighbors, t.transpose(alpha));
    return {aggregated, alpha};
  }

  /// logit = phi_main^a(h_i + h_a).
  Var fuse_predict(Tape<Scalar>& t, Var h_target, Var h_aggregated) const {
    return head_.logit(t, t.add(h_target, h_aggregated));
  }

  /// One logit per negative neighbor: phi_main^a(h_i + h_k^n).
  std::vector<Var> negative_logits(Tape<Scalar>& t, Var h_target, Var h_negatives) const {
    std::vector<Var> out;
    const int k = static_cast<int>(t.value(h_negatives).cols());
    out.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      out.push_back(fuse_predict(t, h_target, t.col(h_negatives, j)));
    }
    return out;
  }

 private:
  int n_d_;
  Parameter<Scalar>* w_aug_;
  Parameter<Scalar>* b_aug_;
  Parameter<Scalar>* w_att_;
  OutputHead<Scalar> head_;
};

}  // namespace vecaug
