#pragma once

#include "vecaug/augment.hpp"
#include "vecaug/cohort.hpp"
#include "vecaug/config.hpp"
#include "vecaug/dataset.hpp"
#include "vecaug/encoder.hpp"
#include "vecaug/metrics.hpp"
#include "vecaug/objectives.hpp"
#include "vecaug/vecpool.hpp"

#include <memory>
#include <string>
#include <vector>

namespace vecaug {

struct TrainConfig {
  int k = 5;
  int n_d = 64;
  int batch_size = 128;
  float lr = 1e-4f;
  LossWeights weights;
  int max_epochs = 100;
  int patience = 20;
  std::uint64_t seed = 42;
  EncoderKind encoder = EncoderKind::MeanPoolMlp;
  int mlp_hidden = 64;
  int head_depth = 1;
  int max_len = 300;
  double split_train = 0.6, split_val = 0.2, split_test = 0.2;
  bool use_cohort = true;
  bool use_aggregation = true;
  bool use_hnsw = false;
  HnswParams hnsw;

  static TrainConfig from(const ExperimentConfig& cfg);
};

/// Encoder structure shared by both phases, read from the flat config.
EncoderConfig encoder_config_from(const ExperimentConfig& cfg);

/// Auxiliary model of the burn-in phase: g_aux and phi_aux. Frozen once the
/// pool is built.
class BurninModel {
 public:
  BurninModel(const EncoderConfig& cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  ParameterStore<float>& params() { return params_; }
  const ParameterStore<float>& params() const { return params_; }
  const SequenceEncoder<float>& encoder() const { return encoder_; }
  const OutputHead<float>& head() const { return head_; }

  /// Burn-in vector e_i = g_aux(x_i), no gradients retained.
  VecF embed(const std::vector<int>& seq) const;
  MatF embed_batch(const std::vector<const std::vector<int>*>& seqs) const;
  /// sigma(phi_aux(g_aux(x))).
  double score(const std::vector<int>& seq) const;

 private:
  EncoderConfig cfg_;
  ParameterStore<float> params_;
  std::mt19937_64 init_rng_;
  SequenceEncoder<float> encoder_;
  OutputHead<float> head_;
};

/// Main model of the augmented phase: g, the cohort augmentation head, and
/// phi_main^a.
class AugmentedModel {
 public:
  AugmentedModel(const EncoderConfig& cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  ParameterStore<float>& params() { return params_; }
  const ParameterStore<float>& params() const { return params_; }
  const SequenceEncoder<float>& encoder() const { return encoder_; }
  const AugmentModel<float>& augment() const { return augment_; }

 private:
  EncoderConfig cfg_;
  ParameterStore<float> params_;
  std::mt19937_64 init_rng_;
  SequenceEncoder<float> encoder_;
  AugmentModel<float> augment_;
};

struct EpochLog {
  int epoch = 0;
  std::string split;
  double auc = 0.0;
  double r_at_p90 = 0.0;
  LossReport loss;
};

struct TrainLog {
  std::vector<EpochLog> entries;
  int best_epoch = -1;
  double best_val_auc = 0.0;
};

/// Burn-in phase: trains g_aux/phi_aux with BCE + Adam, early-stops on
/// validation AUC, then stores every training sample's burn-in vector and
/// label in the (frozen) pool.
TrainLog burnin_train(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                      const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                      BurninModel& model, VectorPool& pool);

/// Augmented phase: cohort-augmented training of the main model against a
/// frozen pool and frozen aux parameters.
TrainLog augmented_train(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                         const std::vector<std::size_t>& val_idx, const TrainConfig& cfg,
                         const BurninModel& aux, const VectorPool& pool, AugmentedModel& model);

/// Inference-phase probability for a batch of sequences (infer-mode cohorts,
/// no negatives, no self-exclusion).
std::vector<double> predict(const std::vector<const std::vector<int>*>& seqs,
                            const TrainConfig& cfg, const BurninModel& aux,
                            const AugmentedModel& model, const VectorPool& pool);

double predict_one(const std::vector<int>& seq, const TrainConfig& cfg, const BurninModel& aux,
                   const AugmentedModel& model, const VectorPool& pool);

/// Score a dataset slice and fill the full EvalResult, including the
/// camouflaged-positive slice at the precision-0.9 operating point.
EvalResult evaluate_slice(const Dataset& ds, const std::vector<std::size_t>& idx,
                          const std::vector<double>& scores);

struct Checkpoint {
  ExperimentConfig config;
  TrainConfig train;
  std::unique_ptr<BurninModel> aux;
  std::unique_ptr<AugmentedModel> main;
  std::unique_ptr<VectorPool> pool;
};

void save_params(const ParameterStore<float>& store, const std::string& path);
void load_params(ParameterStore<float>& store, const std::string& path);

void save_checkpoint(const std::string& dir, const ExperimentConfig& config,
                     const BurninModel& aux, const AugmentedModel& main, const VectorPool& pool);
Checkpoint load_checkpoint(const std::string& dir);

void write_metrics_csv(const std::string& path, const std::vector<EpochLog>& entries);

}  // namespace vecaug
