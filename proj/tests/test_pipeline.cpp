#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vecaug/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace vecaug;

namespace {

/// Linearly separable toy set: class 0 draws tokens from {0..4}, class 1
/// from {5..9}.
Dataset separable_dataset(int n, std::uint64_t seed) {
  Dataset ds;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> low(0, 4), high(5, 9), len(8, 16);
  for (int i = 0; i < n; ++i) {
    BehaviorSequence s;
    s.user_id = "u" + std::to_string(i);
    s.label = i % 2;
    const int m = len(rng);
    for (int j = 0; j < m; ++j) {
      s.actions.push_back(s.label == 0 ? low(rng) : high(rng));
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.n_d = 8;
  cfg.mlp_hidden = 8;
  cfg.batch_size = 32;
  cfg.lr = 0.01f;
  cfg.k = 3;
  cfg.max_epochs = 50;
  cfg.patience = 10;
  cfg.seed = 5;
  return cfg;
}

EncoderConfig toy_encoder(const TrainConfig& cfg) {
  EncoderConfig e;
  e.vocab_size = 10;
  e.embed_dim = cfg.n_d;
  e.mlp_hidden = cfg.mlp_hidden;
  e.max_len = cfg.max_len;
  e.head_depth = cfg.head_depth;
  return e;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("stratified split has the right sizes and is deterministic") {
  Dataset ds = separable_dataset(10, 1);
  const SplitIndices a = stratified_split(ds, 0.6, 0.2, 0.2, 42);
  CHECK(a.train.size() == 6);
  CHECK(a.val.size() == 2);
  CHECK(a.test.size() == 2);
  const SplitIndices b = stratified_split(ds, 0.6, 0.2, 0.2, 42);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  // Disjoint and exhaustive.
  std::vector<bool> seen(10, false);
  for (auto part : {&a.train, &a.val, &a.test}) {
    for (std::size_t i : *part) {
      CHECK_FALSE(seen[i]);
      seen[i] = true;
    }
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("stratification keeps the class rate in every split") {
  Dataset ds;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    BehaviorSequence s;
    s.user_id = "u" + std::to_string(i);
    s.label = i < 100 ? 1 : 0;  // 10% positive
    s.actions = {1, 2, 3};
    ds.samples.push_back(std::move(s));
  }
  const SplitIndices sp = stratified_split(ds, 0.6, 0.2, 0.2, 7);
  int pos = 0;
  for (std::size_t i : sp.train) pos += ds.samples[i].label;
  const double rate = static_cast<double>(pos) / static_cast<double>(sp.train.size());
  CHECK(rate == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("burn-in reaches high AUC on a separable toy set and fills the pool") {
  Dataset ds = separable_dataset(300, 3);
  TrainConfig cfg = toy_config();
  const SplitIndices sp = stratified_split(ds, 0.6, 0.2, 0.2, cfg.seed);
  BurninModel aux(toy_encoder(cfg), cfg.seed);
  VectorPool pool(cfg.n_d);
  const TrainLog log = burnin_train(ds, sp.train, sp.val, cfg, aux, pool);
  CHECK(log.best_val_auc >= 0.99);
  CHECK(pool.count() == sp.train.size());
  CHECK(pool.frozen());
  for (std::size_t i : sp.train) CHECK(pool.contains(ds.sample_id(i)));
  for (std::size_t i : sp.val) CHECK_FALSE(pool.contains(ds.sample_id(i)));
}

TEST_CASE("same seed reproduces a bit-identical pool file") {
  Dataset ds = separable_dataset(120, 4);
  TrainConfig cfg = toy_config();
  cfg.max_epochs = 5;
  const SplitIndices sp = stratified_split(ds, 0.6, 0.2, 0.2, cfg.seed);
  auto run = [&](const std::string& path) {
    BurninModel aux(toy_encoder(cfg), cfg.seed);
    VectorPool pool(cfg.n_d);
    burnin_train(ds, sp.train, sp.val, cfg, aux, pool);
    pool.save(path);
  };
  run("pipe_pool_a.vpl");
  run("pipe_pool_b.vpl");
  CHECK(slurp("pipe_pool_a.vpl") == slurp("pipe_pool_b.vpl"));
  std::remove("pipe_pool_a.vpl");
  std::remove("pipe_pool_b.vpl");
}

TEST_CASE("augmented training: freezing contract, leakage guard, determinism") {
  Dataset ds = separable_dataset(200, 5);
  TrainConfig cfg = toy_config();
  cfg.max_epochs = 8;
  const SplitIndices sp = stratified_split(ds, 0.6, 0.2, 0.2, cfg.seed);
  BurninModel aux(toy_encoder(cfg), cfg.seed);
  VectorPool pool(cfg.n_d);
  burnin_train(ds, sp.train, sp.val, cfg, aux, pool);
  const std::uint64_t aux_hash = aux.params().value_hash();

  SUBCASE("aux parameters stay bit-identical and results are reproducible") {
    auto run = [&] {
      AugmentedModel model(toy_encoder(cfg), cfg.seed);
      augmented_train(ds, sp.train, sp.val, cfg, aux, pool, model);
      std::vector<const std::vector<int>*> seqs;
      for (std::size_t i : sp.test) seqs.push_back(&ds.samples[i].actions);
      return predict(seqs, cfg, aux, model, pool);
    };
    const auto p1 = run();
    CHECK(aux.params().value_hash() == aux_hash);
    const auto p2 = run();
    CHECK(p1 == p2);
  }

  SUBCASE("validation ids found in the pool are a hard error") {
    AugmentedModel model(toy_encoder(cfg), cfg.seed);
    std::vector<std::size_t> bad_val = sp.val;
    bad_val.push_back(sp.train.front());  // this id is in the pool
    CHECK_THROWS_AS(augmented_train(ds, sp.train, bad_val, cfg, aux, pool, model), StateError);
  }

  SUBCASE("unfrozen pools are rejected") {
    VectorPool fresh(cfg.n_d);
    AugmentedModel model(toy_encoder(cfg), cfg.seed);
    CHECK_THROWS_AS(augmented_train(ds, sp.train, sp.val, cfg, aux, fresh, model), StateError);
  }
}

TEST_CASE("the base variant ignores pool contents entirely") {
  Dataset ds = separable_dataset(150, 6);
  TrainConfig cfg = toy_config();
  cfg.max_epochs = 6;
  cfg.use_cohort = false;
  cfg.use_aggregation = false;
  cfg.weights.alpha = 0.0f;
  cfg.weights.beta = 0.0f;
  const SplitIndices sp = stratified_split(ds, 0.6, 0.2, 0.2, cfg.seed);

  auto run_with_burnin_seed = [&](std::uint64_t burnin_seed) {
    TrainConfig bcfg = cfg;
    bcfg.seed = burnin_seed;
    BurninModel aux(toy_encoder(cfg), burnin_seed);
    VectorPool pool(cfg.n_d);
    burnin_train(ds, sp.train, sp.val, bcfg, aux, pool);
    AugmentedModel model(toy_encoder(cfg), cfg.seed);
    augmented_train(ds, sp.train, sp.val, cfg, aux, pool, model);
    std::vector<const std::vector<int>*> seqs;
    for (std::size_t i : sp.test) seqs.push_back(&ds.samples[i].actions);
    return predict(seqs, cfg, aux, model, pool);
  };
  // Different burn-in seeds give different pools; with cohorts off the main
  // model must not notice.
  CHECK(run_with_burnin_seed(100) == run_with_burnin_seed(200));
}

TEST_CASE("batch predict equals single predicts and empty pools fall back") {
  Dataset ds = separable_dataset(100, 7);
  TrainConfig cfg = toy_config();
  cfg.max_epochs = 4;
  const SplitIndices sp = stratified_split(ds, 0.6, 0.2, 0.2, cfg.seed);
  BurninModel aux(toy_encoder(cfg), cfg.seed);
  VectorPool pool(cfg.n_d);
  burnin_train(ds, sp.train, sp.val, cfg, aux, pool);
  AugmentedModel model(toy_encoder(cfg), cfg.seed);
  augmented_train(ds, sp.train, sp.val, cfg, aux, pool, model);

  std::vector<const std::vector<int>*> seqs;
  for (std::size_t i : sp.test) seqs.push_back(&ds.samples[i].actions);
  const auto batch = predict(seqs, cfg, aux, model, pool);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    CHECK(batch[i] == predict_one(*seqs[i], cfg, aux, model, pool));
    CHECK(batch[i] >= 0.0);
    CHECK(batch[i] <= 1.0);
  }

  VectorPool empty(cfg.n_d);
  empty.freeze();
  const double p = predict_one(*seqs[0], cfg, aux, model, empty);
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
}

TEST_CASE("checkpoints reproduce predictions bit-exactly") {
  Dataset ds = separable_dataset(120, 8);
  ExperimentConfig xcfg;
  xcfg.set("vocab_size", "10");
  xcfg.set("n_d", "8");
  xcfg.set("mlp_hidden", "8");
  xcfg.set("batch_size", "32");
  xcfg.set("lr", "0.01");
  xcfg.set("max_epochs", "4");
  xcfg.set("patience", "4");
  xcfg.set("K", "3");
  xcfg.set("seed", "5");
  const TrainConfig cfg = TrainConfig::from(xcfg);
  const EncoderConfig ecfg = encoder_config_from(xcfg);
  const SplitIndices sp = stratified_split(ds, 0.6, 0.2, 0.2, cfg.seed);
  BurninModel aux(ecfg, cfg.seed);
  VectorPool pool(cfg.n_d);
  burnin_train(ds, sp.train, sp.val, cfg, aux, pool);
  AugmentedModel model(ecfg, cfg.seed);
  augmented_train(ds, sp.train, sp.val, cfg, aux, pool, model);

  std::vector<const std::vector<int>*> seqs;
  for (std::size_t i : sp.test) seqs.push_back(&ds.samples[i].actions);
  const auto before = predict(seqs, cfg, aux, model, pool);

  const std::string dir = "pipe_checkpoint_test";
  save_checkpoint(dir, xcfg, aux, model, pool);
  Checkpoint ck = load_checkpoint(dir);
  const auto after = predict(seqs, ck.train, *ck.aux, *ck.main, *ck.pool);
  CHECK(before == after);
  std::filesystem::remove_all(dir);
}

TEST_CASE("metrics csv has the documented header") {
  TrainLog log;
  EpochLog e;
  e.epoch = 0;
  e.split = "train";
  e.auc = 0.5;
  log.entries.push_back(e);
  const std::string path = "pipe_metrics_test.csv";
  write_metrics_csv(path, log.entries);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "epoch,split,auc,r_at_p90,loss_main,loss_sccl,loss_align,loss_decay,loss_total");
  std::remove(path.c_str());
}

TEST_CASE("experiment config rejects unknown keys and round-trips files") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), InputError);
  CHECK_THROWS_AS(cfg.get("also_missing"), InputError);
  cfg.set("alpha", "0.5");
  cfg.set("encoder", "gated-recurrent");
  const std::string path = "pipe_config_test.txt";
  cfg.save_file(path);
  ExperimentConfig loaded;
  loaded.load_file(path);
  CHECK(loaded.get_double("alpha") == 0.5);
  CHECK(loaded.get("encoder") == "gated-recurrent");
  CHECK(loaded.values() == cfg.values());
  std::remove(path.c_str());
}

TEST_CASE("jsonl round trip preserves samples and is byte-stable") {
  Dataset ds = separable_dataset(30, 9);
  ds.samples[0].entity_id = "e007";
  ds.samples[0].camouflaged = true;
  const std::string p1 = "pipe_data_a.jsonl", p2 = "pipe_data_b.jsonl";
  save_jsonl(ds, p1);
  const Dataset loaded = load_jsonl(p1);
  REQUIRE(loaded.size() == ds.size());
  CHECK(loaded.samples[0].user_id == ds.samples[0].user_id);
  CHECK(loaded.samples[0].actions == ds.samples[0].actions);
  CHECK(loaded.samples[0].entity_id == ds.samples[0].entity_id);
  CHECK(loaded.samples[0].camouflaged == ds.samples[0].camouflaged);
  save_jsonl(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}
