#include "vecaug/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_map>

namespace vecaug {

namespace {

constexpr int kAuxIdBase = 0;
constexpr int kMainIdBase = 1000000;

std::vector<MatF> snapshot(const ParameterStore<float>& store) {
  std::vector<MatF> snap;
  snap.reserve(store.size());
  for (const auto& p : store) snap.push_back(p->value);
  return snap;
}

void restore(ParameterStore<float>& store, const std::vector<MatF>& snap) {
  for (std::size_t i = 0; i < store.size(); ++i) store[i].value = snap[i];
}

struct EarlyStopper {
  double best = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int since = 0;

  bool update(double metric, int epoch) {
    if (metric > best) {
      best = metric;
      best_epoch = epoch;
      since = 0;
      return true;
    }
    ++since;
    return false;
  }
};

double safe_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  try {
    return auc(scores, labels);
  } catch (const InputError&) {
    return 0.0;  // single-class validation split; warned at split time
  }
}

double safe_rp90(const std::vector<double>& scores, const std::vector<int>& labels) {
  try {
    return recall_at_precision(scores, labels, 0.9);
  } catch (const InputError&) {
    return 0.0;
  }
}

}  // namespace

TrainConfig TrainConfig::from(const ExperimentConfig& cfg) {
  TrainConfig t;
  t.k = cfg.get_int("K");
  t.n_d = cfg.get_int("n_d");
  t.batch_size = cfg.get_int("batch_size");
  t.lr = static_cast<float>(cfg.get_double("lr"));
  t.weights.alpha = static_cast<float>(cfg.get_double("alpha"));
  t.weights.beta = static_cast<float>(cfg.get_double("beta"));
  t.weights.lambda = static_cast<float>(cfg.get_double("lambda"));
  t.weights.tau = static_cast<float>(cfg.get_double("tau"));
  const std::string dis = cfg.get("dis");
  if (dis == "squared_prob") {
    t.weights.dis = DisKind::SquaredProb;
  } else if (dis == "bce") {
    t.weights.dis = DisKind::Bce;
  } else {
    throw InputError("unknown dis kind: " + dis);
  }
  t.max_epochs = cfg.get_int("max_epochs");
  t.patience = cfg.get_int("patience");
  t.seed = cfg.get_u64("seed");
  t.encoder = encoder_kind_from_string(cfg.get("encoder"));
  t.mlp_hidden = cfg.get_int("mlp_hidden");
  t.head_depth = cfg.get_int("head_depth");
  t.max_len = cfg.get_int("max_len");
  t.split_train = cfg.get_double("split_train");
  t.split_val = cfg.get_double("split_val");
  t.split_test = cfg.get_double("split_test");
  t.use_cohort = cfg.get_bool("use_cohort");
  t.use_aggregation = cfg.get_bool("use_aggregation");
  t.use_hnsw = cfg.get_bool("use_hnsw");
  t.hnsw.m = cfg.get_int("hnsw_m");
  t.hnsw.ef_construction = cfg.get_int("hnsw_ef_construction");
  t.hnsw.ef_search = cfg.get_int("hnsw_ef_search");
  if (t.k < 1 || t.patience < 1 || t.batch_size < 1 || t.lr <= 0) {
    throw InputError("invalid training config (K, patience, batch_size, lr)");
  }
  if (std::abs(t.split_train + t.split_val + t.split_test - 1.0) > 1e-9) {
    throw InputError("split fractions must sum to 1");
  }
  return t;
}

EncoderConfig encoder_config_from(const ExperimentConfig& cfg) {
  EncoderConfig e;
  e.vocab_size = cfg.get_int("vocab_size");
  e.embed_dim = cfg.get_int("n_d");
  e.kind = encoder_kind_from_string(cfg.get("encoder"));
  e.mlp_hidden = cfg.get_int("mlp_hidden");
  e.max_len = cfg.get_int("max_len");
  e.head_depth = cfg.get_int("head_depth");
  return e;
}

BurninModel::BurninModel(const EncoderConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      params_(kAuxIdBase),
      init_rng_(derive_seed(seed, 10)),
      encoder_(cfg, "aux", params_, init_rng_),
      head_("aux.phi", cfg.embed_dim, cfg.head_depth, params_, init_rng_) {}

VecF BurninModel::embed(const std::vector<int>& seq) const {
  Tape<float> t;
  auto e = encoder_.encode(t, seq);
  return t.value(e).col(0);
}

MatF BurninModel::embed_batch(const std::vector<const std::vector<int>*>& seqs) const {
  Tape<float> t;
  auto e = encoder_.encode_batch(t, seqs);
  return t.value(e);
}

double BurninModel::score(const std::vector<int>& seq) const {
  Tape<float> t;
  auto z = head_.logit(t, encoder_.encode(t, seq));
  const double logit = static_cast<double>(t.value(z)(0, 0));
  return 1.0 / (1.0 + std::exp(-logit));
}

AugmentedModel::AugmentedModel(const EncoderConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      params_(kMainIdBase),
      init_rng_(derive_seed(seed, 20)),
      encoder_(cfg, "main", params_, init_rng_),
      augment_(cfg.embed_dim, cfg.head_depth, params_, init_rng_) {}

namespace {

struct BatchResult {
  std::vector<double> probs;
  LossReport report;
};

/// One forward (and optional backward+step) over a batch of sequences.
/// cohorts may be empty when cohorts are disabled; e_cols may be null when
/// the alignment term is off.
BatchResult run_batch(const AugmentedModel& model,
                      const std::vector<const std::vector<int>*>& seqs,
                      const std::vector<int>& labels,
                      const std::vector<const CohortSet*>& cohorts, const MatF* e_cols,
                      const TrainConfig& cfg, Adam<float>* opt, bool want_loss,
                      const std::string& context) {
  using T = Tape<float>;
  T t;
  const int batch = static_cast<int>(seqs.size());
  auto h_all = model.encoder().encode_batch(t, seqs);

  std::vector<T::Var> logit_vars;
  std::vector<T::Var> h_vars;
  logit_vars.reserve(static_cast<std::size_t>(batch));
  h_vars.reserve(static_cast<std::size_t>(batch));
  const AugmentModel<float>& aug = model.augment();
  for (int j = 0; j < batch; ++j) {
    auto h_j = t.col(h_all, j);
    h_vars.push_back(h_j);
    const CohortSet* cs = cohorts.empty() ? nullptr : cohorts[static_cast<std::size_t>(j)];
    const bool aggregate = cfg.use_aggregation && cs != nullptr && !cs->aug.empty();
    if (aggregate) {
      std::vector<VecF> vecs;
      vecs.reserve(cs->aug.size());
      for (const auto& [id, v] : cs->aug) vecs.push_back(v);
      auto h_neighbors = aug.transform_neighbors(t, vecs);
      auto [h_a, alpha] = aug.attentive_aggregate(t, h_neighbors, h_j);
      logit_vars.push_back(aug.fuse_predict(t, h_j, h_a));
    } else {
      // Empty-cohort fallback h_a = 0: the fused logit reduces to phi(h_i).
      logit_vars.push_back(aug.head().logit(t, h_j));
    }
  }
  auto logits = t.hstack(logit_vars);

  BatchResult out;
  out.report.batch_size = batch;
  {
    const MatF& z = t.value(logits);
    out.probs.resize(static_cast<std::size_t>(batch));
    for (int j = 0; j < batch; ++j) {
      const double zj = static_cast<double>(z(0, j));
      out.probs[static_cast<std::size_t>(j)] = 1.0 / (1.0 + std::exp(-zj));
    }
  }
  if (!want_loss) return out;

  auto main = t.bce_with_logits(logits, labels);
  auto total = main;
  out.report.main = static_cast<double>(t.scalar(main));

  if (cfg.weights.alpha != 0.0f && !cohorts.empty()) {
    T::Var sum = t.zeros(1, 1);
    for (int j = 0; j < batch; ++j) {
      const CohortSet* cs = cohorts[static_cast<std::size_t>(j)];
      if (cs == nullptr || cs->neg.empty()) continue;
      std::vector<VecF> vecs;
      vecs.reserve(cs->neg.size());
      for (const auto& [id, v] : cs->neg) vecs.push_back(v);
      auto h_neg = aug.transform_neighbors(t, vecs);
      auto neg_logits = aug.negative_logits(t, h_vars[static_cast<std::size_t>(j)], h_neg);
      auto d_a = dis<float>(t, labels[static_cast<std::size_t>(j)],
                            logit_vars[static_cast<std::size_t>(j)], cfg.weights.dis);
      std::vector<T::Var> d_negs;
      d_negs.reserve(neg_logits.size());
      for (auto zk : neg_logits) {
        d_negs.push_back(dis<float>(t, labels[static_cast<std::size_t>(j)], zk, cfg.weights.dis));
      }
      sum = t.add(sum, sccl_sample<float>(t, d_a, d_negs, cfg.weights.tau));
    }
    auto sccl = t.scale(sum, 1.0f / static_cast<float>(batch));
    out.report.sccl = static_cast<double>(t.scalar(sccl));
    total = t.add(total, t.scale(sccl, cfg.weights.alpha));
  }

  if (cfg.weights.beta != 0.0f && e_cols != nullptr) {
    auto align = align_loss<float>(t, h_all, *e_cols);
    out.report.align = static_cast<double>(t.scalar(align));
    total = t.add(total, t.scale(align, cfg.weights.beta));
  }

  out.report.decay = static_cast<double>(cfg.weights.lambda) * model.params().squared_norm();
  out.report.total = out.report.main + cfg.weights.alpha * out.report.sccl +
                     cfg.weights.beta * out.report.align + out.report.decay;
  if (!std::isfinite(out.report.total)) {
    throw NumericError("non-finite loss " + context);
  }

  if (opt != nullptr) {
    auto& params = const_cast<AugmentedModel&>(model).params();
    params.zero_grads();
    t.backward(total);
    opt->step(params);
  }
  return out;
}

std::vector<std::size_t> shuffled(const std::vector<std::size_t>& idx, std::uint64_t seed) {
  std::vector<std::size_t> out = idx;
  std::mt19937_64 rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace

TrainLog burnin_train(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                      const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                      BurninModel& model, VectorPool& pool) {
  if (train_idx.empty()) throw InputError("burnin_train: empty training split");
  if (pool.count() != 0) throw StateError("burnin_train: pool must start empty");

  Adam<float> opt(cfg.lr, cfg.weights.lambda);
  TrainLog log;
  EarlyStopper stopper;
  std::vector<MatF> best = snapshot(model.params());

  auto score_split = [&](const std::vector<std::size_t>& idx, std::vector<double>& scores,
                         std::vector<int>& labels) {
    scores.clear();
    labels.clear();
    for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(idx.size(), at + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const std::vector<int>*> seqs;
      for (std::size_t i = at; i < end; ++i) {
        seqs.push_back(&ds.samples[idx[i]].actions);
        labels.push_back(ds.samples[idx[i]].label);
      }
      Tape<float> t;
      auto z = model.head().logit(t, model.encoder().encode_batch(t, seqs));
      const MatF& zv = t.value(z);
      for (int j = 0; j < zv.cols(); ++j) {
        scores.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(zv(0, j)))));
      }
    }
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto order = shuffled(train_idx, derive_seed(cfg.seed, 0xB000 + static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::vector<double> train_scores;
    std::vector<int> train_labels;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const std::vector<int>*> seqs;
      std::vector<int> labels;
      for (std::size_t i = at; i < end; ++i) {
        seqs.push_back(&ds.samples[order[i]].actions);
        labels.push_back(ds.samples[order[i]].label);
      }
      Tape<float> t;
      auto z = model.head().logit(t, model.encoder().encode_batch(t, seqs));
      auto loss = t.bce_with_logits(z, labels);
      const double lv = static_cast<double>(t.scalar(loss));
      if (!std::isfinite(lv)) {
        throw NumericError("burnin: non-finite loss at epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(batches));
      }
      const MatF& zv = t.value(z);
      for (int j = 0; j < zv.cols(); ++j) {
        train_scores.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(zv(0, j)))));
        train_labels.push_back(labels[static_cast<std::size_t>(j)]);
      }
      model.params().zero_grads();
      t.backward(loss);
      opt.step(model.params());
      loss_sum += lv;
      ++batches;
    }

    EpochLog train_entry;
    train_entry.epoch = epoch;
    train_entry.split = "train";
    train_entry.auc = safe_auc(train_scores, train_labels);
    train_entry.r_at_p90 = safe_rp90(train_scores, train_labels);
    train_entry.loss.main = loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1));
    train_entry.loss.decay = static_cast<double>(cfg.weights.lambda) * model.params().squared_norm();
    train_entry.loss.total = train_entry.loss.main + train_entry.loss.decay;
    train_entry.loss.batch_size = cfg.batch_size;
    log.entries.push_back(train_entry);

    std::vector<double> val_scores;
    std::vector<int> val_labels;
    double val_auc = 0.0, val_rp = 0.0;
    if (!val_idx.empty()) {
      score_split(val_idx, val_scores, val_labels);
      val_auc = safe_auc(val_scores, val_labels);
      val_rp = safe_rp90(val_scores, val_labels);
      EpochLog val_entry;
      val_entry.epoch = epoch;
      val_entry.split = "val";
      val_entry.auc = val_auc;
      val_entry.r_at_p90 = val_rp;
      val_entry.loss.batch_size = static_cast<int>(val_idx.size());
      log.entries.push_back(val_entry);
    }
    if (stopper.update(val_auc, epoch)) {
      best = snapshot(model.params());
    }
    if (stopper.since >= cfg.patience) break;
  }
  restore(model.params(), best);
  log.best_epoch = stopper.best_epoch;
  log.best_val_auc = stopper.best;

  // Burn-in tail: one forward pass stores every training sample.
  for (std::size_t at = 0; at < train_idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end =
        std::min(train_idx.size(), at + static_cast<std::size_t>(cfg.batch_size));
    std::vector<const std::vector<int>*> seqs;
    for (std::size_t i = at; i < end; ++i) seqs.push_back(&ds.samples[train_idx[i]].actions);
    const MatF e = model.embed_batch(seqs);
    for (std::size_t i = at; i < end; ++i) {
      VectorRecord r;
      r.id = ds.sample_id(train_idx[i]);
      r.label = static_cast<std::uint8_t>(ds.samples[train_idx[i]].label);
      r.vector = e.col(static_cast<int>(i - at));
      pool.add(std::move(r));
    }
  }
  pool.freeze();
  if (cfg.use_hnsw) pool.build_index(cfg.hnsw, cfg.seed);
  return log;
}

TrainLog augmented_train(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                         const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                         const BurninModel& aux, const VectorPool& pool, AugmentedModel& model) {
  if (train_idx.empty()) throw InputError("augmented_train: empty training split");
  if (!pool.frozen()) throw StateError("augmented_train: pool must be frozen");
  for (std::size_t i : val_idx) {
    if (pool.contains(ds.sample_id(i))) {
      throw StateError("leakage: validation sample id " + std::to_string(ds.sample_id(i)) +
                       " present in the pool");
    }
  }
  const std::uint64_t aux_hash_before = aux.params().value_hash();

  CohortOptions copts{cfg.use_hnsw && pool.indexed(), cfg.hnsw.ef_search};

  // Burn-in vectors and cohorts depend only on frozen state; compute once.
  auto embed_all = [&](const std::vector<std::size_t>& idx) {
    MatF e(aux.config().embed_dim, static_cast<int>(idx.size()));
    for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(idx.size(), at + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const std::vector<int>*> seqs;
      for (std::size_t i = at; i < end; ++i) seqs.push_back(&ds.samples[idx[i]].actions);
      e.middleCols(static_cast<int>(at), static_cast<int>(end - at)) = aux.embed_batch(seqs);
    }
    return e;
  };
  const MatF train_e = embed_all(train_idx);
  const MatF val_e = val_idx.empty() ? MatF() : embed_all(val_idx);

  std::vector<CohortSet> train_cohorts;
  std::vector<CohortSet> val_cohorts;
  if (cfg.use_cohort) {
    train_cohorts.reserve(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      const std::size_t s = train_idx[i];
      train_cohorts.push_back(identify_cohort(pool, train_e.col(static_cast<int>(i)), cfg.k,
                                              CohortMode::Train, ds.sample_id(s),
                                              ds.samples[s].label, copts));
    }
    val_cohorts.reserve(val_idx.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
      val_cohorts.push_back(identify_cohort(pool, val_e.col(static_cast<int>(i)), cfg.k,
                                            CohortMode::Infer, std::nullopt, std::nullopt, copts));
    }
  }

  std::unordered_map<std::size_t, std::size_t> train_pos;  // dataset index -> position
  for (std::size_t i = 0; i < train_idx.size(); ++i) train_pos[train_idx[i]] = i;

  Adam<float> opt(cfg.lr, cfg.weights.lambda);
  TrainLog log;
  EarlyStopper stopper;
  std::vector<MatF> best = snapshot(model.params());

  auto score_val = [&](std::vector<double>& scores, std::vector<int>& labels) {
    scores.clear();
    labels.clear();
    for (std::size_t at = 0; at < val_idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(val_idx.size(), at + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const std::vector<int>*> seqs;
      std::vector<int> batch_labels;
      std::vector<const CohortSet*> cohorts;
      for (std::size_t i = at; i < end; ++i) {
        seqs.push_back(&ds.samples[val_idx[i]].actions);
        batch_labels.push_back(ds.samples[val_idx[i]].label);
        if (cfg.use_cohort) cohorts.push_back(&val_cohorts[i]);
      }
      auto res = run_batch(model, seqs, batch_labels, cohorts, nullptr, cfg, nullptr, false, "");
      for (double p : res.probs) scores.push_back(p);
      for (int y : batch_labels) labels.push_back(y);
    }
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto order = shuffled(train_idx, derive_seed(cfg.seed, 0xA000 + static_cast<std::uint64_t>(epoch)));
    LossReport epoch_loss;
    std::size_t batches = 0;
    std::vector<double> train_scores;
    std::vector<int> train_labels;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const std::vector<int>*> seqs;
      std::vector<int> labels;
      std::vector<const CohortSet*> cohorts;
      MatF e_cols(aux.config().embed_dim, static_cast<int>(end - at));
      for (std::size_t i = at; i < end; ++i) {
        const std::size_t pos = train_pos[order[i]];
        seqs.push_back(&ds.samples[order[i]].actions);
        labels.push_back(ds.samples[order[i]].label);
        if (cfg.use_cohort) cohorts.push_back(&train_cohorts[pos]);
        e_cols.col(static_cast<int>(i - at)) = train_e.col(static_cast<int>(pos));
      }
      const std::string ctx =
          "at epoch " + std::to_string(epoch) + " batch " + std::to_string(batches);
      auto res = run_batch(model, seqs, labels, cohorts,
                           cfg.weights.beta != 0.0f ? &e_cols : nullptr, cfg, &opt, true, ctx);
      epoch_loss.main += res.report.main;
      epoch_loss.sccl += res.report.sccl;
      epoch_loss.align += res.report.align;
      epoch_loss.decay = res.report.decay;
      epoch_loss.total += res.report.total;
      ++batches;
      for (std::size_t i = at; i < end; ++i) train_labels.push_back(ds.samples[order[i]].label);
      for (double p : res.probs) train_scores.push_back(p);
    }
    const double nb = static_cast<double>(std::max<std::size_t>(batches, 1));
    epoch_loss.main /= nb;
    epoch_loss.sccl /= nb;
    epoch_loss.align /= nb;
    epoch_loss.total /= nb;
    epoch_loss.batch_size = cfg.batch_size;

    EpochLog train_entry;
    train_entry.epoch = epoch;
    train_entry.split = "train";
    train_entry.auc = safe_auc(train_scores, train_labels);
    train_entry.r_at_p90 = safe_rp90(train_scores, train_labels);
    train_entry.loss = epoch_loss;
    log.entries.push_back(train_entry);

    double val_auc = 0.0;
    if (!val_idx.empty()) {
      std::vector<double> scores;
      std::vector<int> labels;
      score_val(scores, labels);
      val_auc = safe_auc(scores, labels);
      EpochLog val_entry;
      val_entry.epoch = epoch;
      val_entry.split = "val";
      val_entry.auc = val_auc;
      val_entry.r_at_p90 = safe_rp90(scores, labels);
      val_entry.loss.batch_size = static_cast<int>(val_idx.size());
      log.entries.push_back(val_entry);
    }
    if (stopper.update(val_auc, epoch)) {
      best = snapshot(model.params());
    }
    if (stopper.since >= cfg.patience) break;
  }
  restore(model.params(), best);
  log.best_epoch = stopper.best_epoch;
  log.best_val_auc = stopper.best;

  if (aux.params().value_hash() != aux_hash_before) {
    throw StateError("freezing contract violated: aux parameters changed during augmented training");
  }
  return log;
}

std::vector<double> predict(const std::vector<const std::vector<int>*>& seqs,
                            const TrainConfig& cfg, const BurninModel& aux,
                            const AugmentedModel& model, const VectorPool& pool) {
  std::vector<double> out;
  out.reserve(seqs.size());
  CohortOptions copts{cfg.use_hnsw && pool.indexed(), cfg.hnsw.ef_search};
  for (std::size_t at = 0; at < seqs.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(seqs.size(), at + static_cast<std::size_t>(cfg.batch_size));
    std::vector<const std::vector<int>*> batch(seqs.begin() + static_cast<std::ptrdiff_t>(at),
                                               seqs.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<CohortSet> cohort_storage;
    std::vector<const CohortSet*> cohorts;
    if (cfg.use_cohort && pool.count() > 0) {
      const MatF e = aux.embed_batch(batch);
      cohort_storage.reserve(batch.size());
      for (std::size_t j = 0; j < batch.size(); ++j) {
        cohort_storage.push_back(identify_cohort(pool, e.col(static_cast<int>(j)), cfg.k,
                                                 CohortMode::Infer, std::nullopt, std::nullopt,
                                                 copts));
      }
      for (const auto& c : cohort_storage) cohorts.push_back(&c);
    }
    std::vector<int> dummy_labels(batch.size(), 0);
    auto res = run_batch(model, batch, dummy_labels, cohorts, nullptr, cfg, nullptr, false, "");
    for (double p : res.probs) out.push_back(p);
  }
  return out;
}

double predict_one(const std::vector<int>& seq, const TrainConfig& cfg, const BurninModel& aux,
                   const AugmentedModel& model, const VectorPool& pool) {
  std::vector<const std::vector<int>*> one{&seq};
  return predict(one, cfg, aux, model, pool).front();
}

EvalResult evaluate_slice(const Dataset& ds, const std::vector<std::size_t>& idx,
                          const std::vector<double>& scores) {
  if (idx.size() != scores.size()) throw InputError("evaluate_slice: size mismatch");
  std::vector<int> labels(idx.size());
  std::vector<char> camo(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    labels[i] = ds.samples[idx[i]].label;
    camo[i] = ds.samples[idx[i]].camouflaged ? 1 : 0;
  }
  EvalResult r;
  r.auc = auc(scores, labels);
  r.r_at_p[0.9] = recall_at_precision(scores, labels, 0.9);

  std::size_t camo_pos = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    camo_pos += static_cast<std::size_t>(labels[i] == 1 && camo[i]);
  }
  if (camo_pos > 0) {
    const double thr = precision_operating_threshold(scores, labels, 0.9);
    std::size_t caught = 0;
    std::vector<double> slice_scores;
    std::vector<int> slice_labels;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (labels[i] == 1 && camo[i]) {
        if (scores[i] >= thr) ++caught;
        slice_scores.push_back(scores[i]);
        slice_labels.push_back(1);
      } else if (labels[i] == 0) {
        slice_scores.push_back(scores[i]);
        slice_labels.push_back(0);
      }
    }
    r.recall_at_p90_camouflaged = static_cast<double>(caught) / static_cast<double>(camo_pos);
    r.auc_camouflaged = safe_auc(slice_scores, slice_labels);
  }
  return r;
}

namespace {

constexpr char kParamMagic[4] = {'V', 'P', 'R', '1'};

}  // namespace

void save_params(const ParameterStore<float>& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path);
  os.write(kParamMagic, 4);
  const std::uint32_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint32_t count = static_cast<std::uint32_t>(store.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& p : store) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(p->name.size());
    os.write(reinterpret_cast<const char*>(&name_len), 4);
    os.write(p->name.data(), name_len);
    const std::uint32_t rows = static_cast<std::uint32_t>(p->value.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(p->value.cols());
    os.write(reinterpret_cast<const char*>(&rows), 4);
    os.write(reinterpret_cast<const char*>(&cols), 4);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        const float v = p->value(static_cast<int>(r), static_cast<int>(c));
        os.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
  }
  if (!os) throw InputError("write failed: " + path);
}

void load_params(ParameterStore<float>& store, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open parameter file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kParamMagic, 4) != 0) {
    throw FormatError("bad magic in parameter file: " + path);
  }
  std::uint32_t version = 0, count = 0;
  is.read(reinterpret_cast<char*>(&version), 4);
  is.read(reinterpret_cast<char*>(&count), 4);
  if (!is || version != 1) throw FormatError("unsupported parameter file version");
  if (count != store.size()) {
    throw FormatError("parameter count mismatch: file has " + std::to_string(count) +
                      ", model has " + std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), 4);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    std::uint32_t rows = 0, cols = 0;
    is.read(reinterpret_cast<char*>(&rows), 4);
    is.read(reinterpret_cast<char*>(&cols), 4);
    if (!is) throw FormatError("parameter file truncated: " + path);
    Parameter<float>& p = store[i];
    if (name != p.name || rows != static_cast<std::uint32_t>(p.value.rows()) ||
        cols != static_cast<std::uint32_t>(p.value.cols())) {
      throw FormatError("parameter layout mismatch at " + p.name);
    }
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        float v = 0.0f;
        is.read(reinterpret_cast<char*>(&v), 4);
        p.value(static_cast<int>(r), static_cast<int>(c)) = v;
      }
    }
    if (!is) throw FormatError("parameter file truncated: " + path);
  }
}

void save_checkpoint(const std::string& dir, const ExperimentConfig& config,
                     const BurninModel& aux, const AugmentedModel& main, const VectorPool& pool) {
  std::filesystem::create_directories(dir);
  config.save_file(dir + "/config.txt");
  save_params(aux.params(), dir + "/aux.vpr");
  save_params(main.params(), dir + "/main.vpr");
  pool.save(dir + "/pool.vpl");
}

Checkpoint load_checkpoint(const std::string& dir) {
  Checkpoint ck;
  ck.config.load_file(dir + "/config.txt");
  ck.train = TrainConfig::from(ck.config);
  const EncoderConfig ecfg = encoder_config_from(ck.config);
  ck.aux = std::make_unique<BurninModel>(ecfg, ck.train.seed);
  ck.main = std::make_unique<AugmentedModel>(ecfg, ck.train.seed);
  load_params(ck.aux->params(), dir + "/aux.vpr");
  load_params(ck.main->params(), dir + "/main.vpr");
  ck.pool = std::make_unique<VectorPool>(VectorPool::load(dir + "/pool.vpl"));
  ck.pool->freeze();
  if (ck.train.use_hnsw) ck.pool->build_index(ck.train.hnsw, ck.train.seed);
  return ck;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochLog>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path);
  os << "epoch,split,auc,r_at_p90,loss_main,loss_sccl,loss_align,loss_decay,loss_total\n";
  os.precision(10);
  for (const EpochLog& e : entries) {
    os << e.epoch << "," << e.split << "," << e.auc << "," << e.r_at_p90 << "," << e.loss.main
       << "," << e.loss.sccl << "," << e.loss.align << "," << e.loss.decay << "," << e.loss.total
       << "\n";
  }
}

}  // namespace vecaug
