#pragma once

#include "vecaug/dataset.hpp"

#include <cstdint>

namespace vecaug {

/// Synthetic camouflaged-fraud generator. Normal users walk a shared normal
/// Markov chain; each fraud entity owns a chain shared by its accounts;
/// camouflaged fraud accounts draw each step from the normal chain with
/// probability camouflage_ratio.
struct GenConfig {
  int n_users = 10000;
  double pos_rate = 0.01;
  int vocab_size = 653;
  int seq_len_min = 50;
  int seq_len_max = 300;
  int n_fraud_entities = 10;
  int accounts_min = 2;
  int accounts_max = 30;
  double camouflage_ratio = 0.0;      // rho
  double camouflaged_fraction = 0.0;  // share of fraud users that camouflage
  std::uint64_t seed = 0;
};

Dataset generate(const GenConfig& cfg);

/// Dense (vocab+1) x vocab transition probabilities of one entity chain; the
/// last row is the initial distribution. For evaluation and tests only.
Mat<double> entity_transition_probs(const GenConfig& cfg, int entity);

}  // namespace vecaug
