#pragma once

#include "vecaug/tape.hpp"

#include <algorithm>

#include <vector>

namespace vecaug {

enum class DisKind { SquaredProb, Bce };

struct LossWeights {
  float alpha = 0.001f;   // L_sccl weight
  float beta = 1e-5f;     // L_align weight
  float lambda = 1e-5f;   // weight decay
  float tau = 1.0f;       // SCCL temperature
  DisKind dis = DisKind::SquaredProb;
};

struct LossReport {
  double main = 0.0;
  double sccl = 0.0;
  double align = 0.0;
  double decay = 0.0;
  double total = 0.0;
  int batch_size = 0;
};

/// Mean BCE over a 1xN logit row (stable logit form).
template <class Scalar>
typename Tape<Scalar>::Var bce_main(Tape<Scalar>& t, typename Tape<Scalar>::Var logits,
                                    const std::vector<int>& labels) {
  return t.bce_with_logits(logits, labels);
}

/// dis(y, logit): squared probability-space distance (y - sigmoid(z))^2, or
/// the per-sample BCE alternative behind the config switch.
template <class Scalar>
typename Tape<Scalar>::Var dis(Tape<Scalar>& t, int label, typename Tape<Scalar>::Var logit,
                               DisKind kind = DisKind::SquaredProb) {
  if (kind == DisKind::SquaredProb) {
    auto y = t.constant(Mat<Scalar>::Constant(1, 1, static_cast<Scalar>(label)));
    return t.square(t.sub(y, t.sigmoid(logit)));
  }
  return t.bce_with_logits(logit, std::vector<int>{label});
}

/// Per-sample label-aware separation loss:
///   -log( exp(-d_a/tau) / (exp(-d_a/tau) + sum_k exp(-d_k/tau)) ).
/// Empty negative set contributes 0.
template <class Scalar>
typename Tape<Scalar>::Var sccl_sample(Tape<Scalar>& t, typename Tape<Scalar>::Var d_aug,
                                       const std::vector<typename Tape<Scalar>::Var>& d_negs,
                                       Scalar tau) {
  if (tau <= Scalar(0)) throw InputError("sccl: tau must be positive");
  if (d_negs.empty()) return t.zeros(1, 1);
  const Scalar inv_tau = Scalar(1) / tau;
  // Shift every exponent by the smallest distance so the largest term in the
  // denominator is exp(0); the constant cancels exactly in the final value
  // but keeps exp() from overflowing at sharp temperatures.
  Scalar dmin = t.value(d_aug)(0, 0);
  for (auto d_k : d_negs) dmin = std::min(dmin, t.value(d_k)(0, 0));
  auto shift = t.constant(Mat<Scalar>::Constant(1, 1, dmin));
  auto denom = t.exp_(t.scale(t.sub(d_aug, shift), -inv_tau));
  for (auto d_k : d_negs) {
    denom = t.add(denom, t.exp_(t.scale(t.sub(d_k, shift), -inv_tau)));
  }
  // -log(exp(-d_a/tau)/denom) = (d_a - dmin)/tau + log(sum exp(-(d - dmin)/tau))
  return t.add(t.scale(t.sub(d_aug, shift), inv_tau), t.log_(denom));
}

/// Mean squared distance between burn-in vectors and main representations,
/// batch columns of h against the constant matrix e.
template <class Scalar>
typename Tape<Scalar>::Var align_loss(Tape<Scalar>& t, typename Tape<Scalar>::Var h_batch,
                                      const Mat<Scalar>& e_batch) {
  const auto& h = t.value(h_batch);
  if (h.rows() != e_batch.rows() || h.cols() != e_batch.cols()) {
    throw ShapeError("align_loss: representation batch does not match vector batch");
  }
  auto diff = t.sub(h_batch, t.constant(e_batch));
  auto total = t.sum(t.square(diff));
  return t.scale(total, Scalar(1) / static_cast<Scalar>(e_batch.cols()));
}

/// Weighted total of the training objectives. The decay term is realized in the
/// optimizer; it is reported but not added to the differentiated loss.
template <class Scalar>
typename Tape<Scalar>::Var total_loss(Tape<Scalar>& t, typename Tape<Scalar>::Var main,
                                      typename Tape<Scalar>::Var sccl,
                                      typename Tape<Scalar>::Var align, const LossWeights& w) {
  auto out = main;
  if (w.alpha != 0.0f) out = t.add(out, t.scale(sccl, static_cast<Scalar>(w.alpha)));
  if (w.beta != 0.0f) out = t.add(out, t.scale(align, static_cast<Scalar>(w.beta)));
  return out;
}

}  // namespace vecaug
