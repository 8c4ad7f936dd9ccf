#pragma once

#include "vecaug/tape.hpp"

#include <string>
#include <vector>

namespace vecaug {

enum class EncoderKind { MeanPoolMlp, GatedRecurrent };

inline const char* to_string(EncoderKind k) {
  return k == EncoderKind::MeanPoolMlp ? "mean-pool-mlp" : "gated-recurrent";
}

inline EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "mean-pool-mlp") return EncoderKind::MeanPoolMlp;
  if (s == "gated-recurrent") return EncoderKind::GatedRecurrent;
  throw InputError("unknown encoder kind: " + s);
}

struct EncoderConfig {
  int vocab_size = 0;
  int embed_dim = 64;  // n_d
  EncoderKind kind = EncoderKind::MeanPoolMlp;
  int mlp_hidden = 64;
  int max_len = 300;
  int head_depth = 1;  // hidden layers in the output MLP
};

/// Output layer mapping an n_d vector (or n_d x B batch) to a logit per
/// column. head_depth 0 is a plain affine map; depth 1 adds one tanh hidden
/// layer of width n_d.
template <class Scalar>
class OutputHead {
 public:
  OutputHead(const std::string& prefix, int in_dim, int depth, ParameterStore<Scalar>& store,
             std::mt19937_64& rng)
      : depth_(depth) {
    int d = in_dim;
    for (int l = 0; l < depth; ++l) {
      hidden_w_.push_back(&store.add_xavier(prefix + ".w" + std::to_string(l), in_dim, d, rng));
      hidden_b_.push_back(&store.add(prefix + ".b" + std::to_string(l), in_dim, 1));
      d = in_dim;
    }
    out_w_ = &store.add_xavier(prefix + ".w_out", 1, d, rng);
    out_b_ = &store.add(prefix + ".b_out", 1, 1);
  }

  /// vecs: n_d x B. Returns 1 x B logits.
  typename Tape<Scalar>::Var logit(Tape<Scalar>& t, typename Tape<Scalar>::Var vecs) const {
    auto x = vecs;
    if (t.value(x).rows() != out_w_->value.cols() && depth_ == 0) {
      throw ShapeError("predict_logit: input dim " + std::to_string(t.value(x).rows()) +
                       " does not match head dim " + std::to_string(out_w_->value.cols()));
    }
    for (int l = 0; l < depth_; ++l) {
      x = t.tanh_(t.add_colwise(t.matmul(t.param(*hidden_w_[l]), x), t.param(*hidden_b_[l])));
    }
    auto z = t.matmul(t.param(*out_w_), x);
    return t.add_colwise(z, t.param(*out_b_));
  }

 private:
  int depth_;
  std::vector<Parameter<Scalar>*> hidden_w_, hidden_b_;
  Parameter<Scalar>* out_w_;
  Parameter<Scalar>* out_b_;
};

/// Sequence encoder g: token-id stream -> n_d vector. The mean-pool kind is
/// permutation-invariant; the gated-recurrent kind is order-sensitive.
template <class Scalar>
class SequenceEncoder {
 public:
  SequenceEncoder(const EncoderConfig& cfg, const std::string& prefix,
                  ParameterStore<Scalar>& store, std::mt19937_64& rng)
      : cfg_(cfg) {
    if (cfg.embed_dim <= 0 || cfg.vocab_size <= 0) {
      throw InputError("encoder config: embed_dim and vocab_size must be positive");
    }
    embed_ = &store.add_xavier(prefix + ".embed", cfg.embed_dim, cfg.vocab_size, rng);
    if (cfg.kind == EncoderKind::MeanPoolMlp) {
      w1_ = &store.add_xavier(prefix + ".w1", cfg.mlp_hidden, cfg.embed_dim, rng);
      b1_ = &store.add(prefix + ".b1", cfg.mlp_hidden, 1);
      w2_ = &store.add_xavier(prefix + ".w2", cfg.embed_dim, cfg.mlp_hidden, rng);
      b2_ = &store.add(prefix + ".b2", cfg.embed_dim, 1);
    } else {
      const int d = cfg.embed_dim;
      wz_ = &store.add_xavier(prefix + ".wz", d, d, rng);
      uz_ = &store.add_xavier(prefix + ".uz", d, d, rng);
      bz_ = &store.add(prefix + ".bz", d, 1);
      wc_ = &store.add_xavier(prefix + ".wc", d, d, rng);
      uc_ = &store.add_xavier(prefix + ".uc", d, d, rng);
      bc_ = &store.add(prefix + ".bc", d, 1);
    }
  }

  const EncoderConfig& config() const { return cfg_; }

  typename Tape<Scalar>::Var encode(Tape<Scalar>& t, const std::vector<int>& tokens) const {
    std::vector<int> seq = validated(tokens);
    if (cfg_.kind == EncoderKind::MeanPoolMlp) {
      std::vector<const std::vector<int>*> one{&seq};
      return encode_validated_batch(t, one);
    }
    return encode_recurrent(t, seq);
  }

  /// Batched encode: returns n_d x B. For the mean-pool kind this is a single
  /// matrix product against a token-frequency matrix.
  typename Tape<Scalar>::Var encode_batch(Tape<Scalar>& t,
                                          const std::vector<const std::vector<int>*>& seqs) const {
    if (seqs.empty()) throw InputError("encode_batch: empty batch");
    std::vector<std::vector<int>> validated_seqs;
    validated_seqs.reserve(seqs.size());
    for (const auto* s : seqs) validated_seqs.push_back(validated(*s));
    if (cfg_.kind == EncoderKind::MeanPoolMlp) {
      std::vector<const std::vector<int>*> ptrs;
      ptrs.reserve(validated_seqs.size());
      for (const auto& s : validated_seqs) ptrs.push_back(&s);
      return encode_validated_batch(t, ptrs);
    }
    std::vector<typename Tape<Scalar>::Var> cols;
    cols.reserve(validated_seqs.size());
    for (const auto& s : validated_seqs) cols.push_back(encode_recurrent(t, s));
    return t.hstack(cols);
  }

 private:
  std::vector<int> validated(const std::vector<int>& tokens) const {
    if (tokens.empty()) throw InputError("encode: empty sequence");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] < 0 || tokens[i] >= cfg_.vocab_size) {
        throw InputError("encode: out-of-vocab token " + std::to_string(tokens[i]) +
                         " at position " + std::to_string(i));
      }
    }
    if (static_cast<int>(tokens.size()) <= cfg_.max_len) return tokens;
    // Keep the most recent max_len actions.
    return std::vector<int>(tokens.end() - cfg_.max_len, tokens.end());
  }

  typename Tape<Scalar>::Var encode_validated_batch(
      Tape<Scalar>& t, const std::vector<const std::vector<int>*>& seqs) const {
    Mat<Scalar> freq = Mat<Scalar>::Zero(cfg_.vocab_size, static_cast<int>(seqs.size()));
    for (std::size_t b = 0; b < seqs.size(); ++b) {
      const Scalar w = Scalar(1) / static_cast<Scalar>(seqs[b]->size());
      for (int tok : *seqs[b]) freq(tok, static_cast<int>(b)) += w;
    }
    auto mean_emb = t.matmul(t.param(*embed_), t.constant(std::move(freq)));
    auto h = t.tanh_(t.add_colwise(t.matmul(t.param(*w1_), mean_emb), t.param(*b1_)));
    return t.add_colwise(t.matmul(t.param(*w2_), h), t.param(*b2_));
  }

  typename Tape<Scalar>::Var encode_recurrent(Tape<Scalar>& t, const std::vector<int>& seq) const {
    auto x_all = t.gather_cols(t.param(*embed_), seq);
    auto wz = t.param(*wz_), uz = t.param(*uz_), bz = t.param(*bz_);
    auto wc = t.param(*wc_), uc = t.param(*uc_), bc = t.param(*bc_);
    auto ones = t.constant(Mat<Scalar>::Ones(cfg_.embed_dim, 1));
    auto state = t.zeros(cfg_.embed_dim, 1);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      auto x = t.col(x_all, static_cast<int>(i));
      auto z = t.sigmoid(t.add_colwise(t.add(t.matmul(wz, x), t.matmul(uz, state)), bz));
      auto c = t.tanh_(t.add_colwise(t.add(t.matmul(wc, x), t.matmul(uc, state)), bc));
      state = t.add(t.mul(z, state), t.mul(t.sub(ones, z), c));
    }
    return state;
  }

  EncoderConfig cfg_;
  Parameter<Scalar>* embed_ = nullptr;
  Parameter<Scalar>* w1_ = nullptr;
  Parameter<Scalar>* b1_ = nullptr;
  Parameter<Scalar>* w2_ = nullptr;
  Parameter<Scalar>* b2_ = nullptr;
  Parameter<Scalar>* wz_ = nullptr;
  Parameter<Scalar>* uz_ = nullptr;
  Parameter<Scalar>* bz_ = nullptr;
  Parameter<Scalar>* wc_ = nullptr;
  Parameter<Scalar>* uc_ = nullptr;
  Parameter<Scalar>* bc_ = nullptr;
};

}  // namespace vecaug
