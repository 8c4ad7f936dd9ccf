#include "vecaug/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

namespace vecaug {

namespace {

// Sparse per-row categorical chain: row i gives the next-token distribution
// after token i; row vocab_size is the initial distribution.
struct Chain {
  std::vector<std::vector<int>> support;
  std::vector<std::vector<double>> cdf;

  int sample(int prev, std::mt19937_64& rng) const {
    const auto& row_cdf = cdf[static_cast<std::size_t>(prev)];
    const auto& row_sup = support[static_cast<std::size_t>(prev)];
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    auto it = std::lower_bound(row_cdf.begin(), row_cdf.end(), u);
    std::size_t j = static_cast<std::size_t>(it - row_cdf.begin());
    if (j >= row_sup.size()) j = row_sup.size() - 1;
    return row_sup[j];
  }
};

Chain build_chain(std::uint64_t seed, int vocab, int support_size) {
  Chain c;
  support_size = std::min(support_size, vocab);
  const int rows = vocab + 1;
  c.support.resize(static_cast<std::size_t>(rows));
  c.cdf.resize(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    std::mt19937_64 rng(derive_seed(seed, 0xC0ull * static_cast<std::uint64_t>(rows) +
                                              static_cast<std::uint64_t>(r)));
    std::uniform_int_distribution<int> tok(0, vocab - 1);
    auto& sup = c.support[static_cast<std::size_t>(r)];
    while (static_cast<int>(sup.size()) < support_size) {
      const int t = tok(rng);
      if (std::find(sup.begin(), sup.end(), t) == sup.end()) sup.push_back(t);
    }
    std::exponential_distribution<double> weight(1.0);
    std::vector<double> w(sup.size());
    double total = 0.0;
    for (auto& x : w) {
      x = weight(rng) + 1e-6;
      total += x;
    }
    auto& cdf = c.cdf[static_cast<std::size_t>(r)];
    cdf.resize(sup.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < sup.size(); ++j) {
      acc += w[j] / total;
      cdf[j] = acc;
    }
    cdf.back() = 1.0;
  }
  return c;
}

constexpr int kNormalSupport = 32;
constexpr int kEntitySupport = 8;

std::uint64_t normal_chain_seed(const GenConfig& cfg) { return derive_seed(cfg.seed, 1); }
std::uint64_t entity_chain_seed(const GenConfig& cfg, int entity) {
  return derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(entity));
}

}  // namespace

Mat<double> entity_transition_probs(const GenConfig& cfg, int entity) {
  const Chain c = build_chain(entity_chain_seed(cfg, entity), cfg.vocab_size, kEntitySupport);
  Mat<double> probs = Mat<double>::Zero(cfg.vocab_size + 1, cfg.vocab_size);
  for (int r = 0; r <= cfg.vocab_size; ++r) {
    double prev_cdf = 0.0;
    const auto& sup = c.support[static_cast<std::size_t>(r)];
    const auto& cdf = c.cdf[static_cast<std::size_t>(r)];
    for (std::size_t j = 0; j < sup.size(); ++j) {
      probs(r, sup[j]) += cdf[j] - prev_cdf;
      prev_cdf = cdf[j];
    }
  }
  return probs;
}

Dataset generate(const GenConfig& cfg) {
  if (cfg.n_users <= 0 || cfg.vocab_size < 2) throw InputError("datagen: invalid config");
  if (cfg.pos_rate <= 0.0 || cfg.pos_rate >= 1.0) throw InputError("datagen: pos_rate in (0,1)");
  if (cfg.camouflage_ratio < 0.0 || cfg.camouflage_ratio > 1.0) {
    throw InputError("datagen: camouflage_ratio in [0,1]");
  }
  if (cfg.seq_len_min < 1 || cfg.seq_len_max < cfg.seq_len_min) {
    throw InputError("datagen: invalid sequence length range");
  }
  const int positives =
      static_cast<int>(std::lround(cfg.pos_rate * static_cast<double>(cfg.n_users)));
  if (static_cast<long>(cfg.n_fraud_entities) * cfg.accounts_max < positives) {
    throw InputError("datagen: infeasible config, entities * accounts_max < positives");
  }

  const Chain normal = build_chain(normal_chain_seed(cfg), cfg.vocab_size, kNormalSupport);
  std::vector<Chain> entity_chains;
  entity_chains.reserve(static_cast<std::size_t>(cfg.n_fraud_entities));
  for (int e = 0; e < cfg.n_fraud_entities; ++e) {
    entity_chains.push_back(build_chain(entity_chain_seed(cfg, e), cfg.vocab_size, kEntitySupport));
  }

  // Fraud assignment: shuffle users, the first `positives` are fraud; entity
  // sizes drawn from the accounts range, round-robin until all assigned.
  std::vector<int> order(static_cast<std::size_t>(cfg.n_users));
  for (int i = 0; i < cfg.n_users; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 assign_rng(derive_seed(cfg.seed, 2));
  std::shuffle(order.begin(), order.end(), assign_rng);

  std::vector<int> entity_of(static_cast<std::size_t>(cfg.n_users), -1);
  std::vector<char> camo_of(static_cast<std::size_t>(cfg.n_users), 0);
  {
    std::uniform_int_distribution<int> size_dist(cfg.accounts_min, cfg.accounts_max);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int assigned = 0, entity = 0;
    while (assigned < positives) {
      const int take = std::min(size_dist(assign_rng), positives - assigned);
      for (int j = 0; j < take; ++j) {
        const int user = order[static_cast<std::size_t>(assigned + j)];
        entity_of[static_cast<std::size_t>(user)] = entity % cfg.n_fraud_entities;
        camo_of[static_cast<std::size_t>(user)] = unif(assign_rng) < cfg.camouflaged_fraction;
      }
      assigned += take;
      ++entity;
    }
  }

  Dataset ds;
  ds.samples.resize(static_cast<std::size_t>(cfg.n_users));
  char idbuf[32];
  for (int u = 0; u < cfg.n_users; ++u) {
    BehaviorSequence& s = ds.samples[static_cast<std::size_t>(u)];
    std::snprintf(idbuf, sizeof(idbuf), "u%06d", u);
    s.user_id = idbuf;
    const int entity = entity_of[static_cast<std::size_t>(u)];
    s.label = entity >= 0 ? 1 : 0;
    if (entity >= 0) {
      std::snprintf(idbuf, sizeof(idbuf), "e%03d", entity);
      s.entity_id = idbuf;
      s.camouflaged = camo_of[static_cast<std::size_t>(u)] != 0;
    }

    std::mt19937_64 rng(derive_seed(cfg.seed, 0x10000 + static_cast<std::uint64_t>(u)));
    std::uniform_int_distribution<int> len_dist(cfg.seq_len_min, cfg.seq_len_max);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int len = len_dist(rng);
    s.actions.resize(static_cast<std::size_t>(len));
    const Chain* own = entity >= 0 ? &entity_chains[static_cast<std::size_t>(entity)] : &normal;
    int prev = cfg.vocab_size;  // initial-distribution row
    for (int i = 0; i < len; ++i) {
      const Chain* src = own;
      if (entity >= 0 && s.camouflaged && unif(rng) < cfg.camouflage_ratio) src = &normal;
      const int tok = src->sample(prev, rng);
      s.actions[static_cast<std::size_t>(i)] = tok;
      prev = tok;
    }
  }
  return ds;
}

}  // namespace vecaug
