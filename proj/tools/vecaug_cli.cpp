// vecaug command-line front end: data generation, the two training phases,
// evaluation, prediction, ablation/sweep harnesses, and the KNN benchmark.

#include "vecaug/datagen.hpp"
#include "vecaug/harness.hpp"
#include "vecaug/pipeline.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

namespace {

using namespace vecaug;

/// Registers every config key as a flag of the same name, plus --config for a
/// key=value file. Overrides are applied on top of the file.
struct ConfigArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value config file");
    const ExperimentConfig defaults;
    for (const auto& [key, value] : defaults.values()) {
      app->add_option_function<std::string>(
             "--" + key, [this, key = key](const std::string& v) { overrides[key] = v; },
             "config key (default: " + value + ")")
          ->type_name("VALUE");
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return cfg;
  }
};

GenConfig gen_config_from(const ExperimentConfig& cfg) {
  GenConfig g;
  g.n_users = cfg.get_int("n_users");
  g.pos_rate = cfg.get_double("pos_rate");
  g.vocab_size = cfg.get_int("vocab_size");
  g.seq_len_min = cfg.get_int("seq_len_min");
  g.seq_len_max = cfg.get_int("seq_len_max");
  g.n_fraud_entities = cfg.get_int("n_fraud_entities");
  g.accounts_min = cfg.get_int("accounts_min");
  g.accounts_max = cfg.get_int("accounts_max");
  g.camouflage_ratio = cfg.get_double("camouflage_ratio");
  g.camouflaged_fraction = cfg.get_double("camouflaged_fraction");
  g.seed = cfg.get_u64("seed");
  return g;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoull(tok));
  }
  if (out.empty()) throw InputError("no seeds given");
  return out;
}

SweepGrid parse_grid(const std::string& s) {
  // Format: key=v1,v2,...;key2=v1,v2  e.g. "alpha=0,0.001,1;K=1,2,4,8"
  SweepGrid grid;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw InputError("bad grid term (want key=v1,v2,...): " + part);
    std::vector<double> values;
    std::stringstream vs(part.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      if (!v.empty()) values.push_back(std::stod(v));
    }
    grid.emplace_back(part.substr(0, eq), std::move(values));
  }
  if (grid.empty()) throw InputError("empty sweep grid");
  return grid;
}

void print_eval(const std::string& tag, const EvalResult& e) {
  std::printf("%s: auc=%.6f r@p0.9=%.6f", tag.c_str(), e.auc,
              e.r_at_p.count(0.9) ? e.r_at_p.at(0.9) : 0.0);
  if (e.recall_at_p90_camouflaged >= 0) {
    std::printf(" camo_recall@p0.9=%.6f camo_auc=%.6f", e.recall_at_p90_camouflaged,
                e.auc_camouflaged);
  }
  std::printf("\n");
}

int cmd_datagen(const ExperimentConfig& cfg, const std::string& out) {
  const GenConfig g = gen_config_from(cfg);
  const Dataset ds = generate(g);
  save_jsonl(ds, out);
  std::size_t pos = 0, camo = 0;
  for (const auto& s : ds.samples) {
    pos += static_cast<std::size_t>(s.label == 1);
    camo += static_cast<std::size_t>(s.camouflaged);
  }
  std::printf("wrote %zu users to %s (%zu positive, %zu camouflaged, %d entities)\n",
              ds.size(), out.c_str(), pos, camo, g.n_fraud_entities);
  return 0;
}

struct BurninArtifacts {
  TrainConfig train;
  SplitIndices split;
  std::unique_ptr<BurninModel> aux;
  std::unique_ptr<VectorPool> pool;
  TrainLog log;
};

BurninArtifacts run_burnin(const Dataset& ds, const ExperimentConfig& cfg) {
  BurninArtifacts a;
  a.train = TrainConfig::from(cfg);
  a.split = stratified_split(ds, a.train.split_train, a.train.split_val, a.train.split_test,
                             a.train.seed);
  const EncoderConfig ecfg = encoder_config_from(cfg);
  a.aux = std::make_unique<BurninModel>(ecfg, a.train.seed);
  a.pool = std::make_unique<VectorPool>(ecfg.embed_dim);
  a.log = burnin_train(ds, a.split.train, a.split.val, a.train, *a.aux, *a.pool);
  return a;
}

int cmd_burnin(const ExperimentConfig& cfg, const std::string& data, const std::string& out_dir) {
  const Dataset ds = load_jsonl(data);
  BurninArtifacts a = run_burnin(ds, cfg);
  std::filesystem::create_directories(out_dir);
  cfg.save_file(out_dir + "/config.txt");
  save_params(a.aux->params(), out_dir + "/aux.vpr");
  a.pool->save(out_dir + "/pool.vpl");
  write_metrics_csv(out_dir + "/metrics.csv", a.log.entries);
  std::printf("burn-in done: best epoch %d, val auc %.6f, pool size %zu\n", a.log.best_epoch,
              a.log.best_val_auc, a.pool->count());
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& data, const std::string& burnin_dir,
              const std::string& out_dir) {
  const Dataset ds = load_jsonl(data);
  BurninArtifacts a;
  if (burnin_dir.empty()) {
    a = run_burnin(ds, cfg);
  } else {
    a.train = TrainConfig::from(cfg);
    a.split = stratified_split(ds, a.train.split_train, a.train.split_val, a.train.split_test,
                               a.train.seed);
    const EncoderConfig ecfg = encoder_config_from(cfg);
    a.aux = std::make_unique<BurninModel>(ecfg, a.train.seed);
    load_params(a.aux->params(), burnin_dir + "/aux.vpr");
    a.pool = std::make_unique<VectorPool>(VectorPool::load(burnin_dir + "/pool.vpl"));
    a.pool->freeze();
    if (a.train.use_hnsw) a.pool->build_index(a.train.hnsw, a.train.seed);
  }

  AugmentedModel model(encoder_config_from(cfg), a.train.seed);
  TrainLog log = augmented_train(ds, a.split.train, a.split.val, a.train, *a.aux, *a.pool, model);

  std::filesystem::create_directories(out_dir);
  save_checkpoint(out_dir + "/checkpoint", cfg, *a.aux, model, *a.pool);
  write_metrics_csv(out_dir + "/metrics.csv", log.entries);
  a.pool->save(out_dir + "/pool.vpl");

  std::vector<const std::vector<int>*> seqs;
  for (std::size_t i : a.split.test) seqs.push_back(&ds.samples[i].actions);
  if (!seqs.empty()) {
    const auto scores = predict(seqs, a.train, *a.aux, model, *a.pool);
    print_eval("test", evaluate_slice(ds, a.split.test, scores));
  }
  std::printf("train done: best epoch %d, val auc %.6f, checkpoint at %s/checkpoint\n",
              log.best_epoch, log.best_val_auc, out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& split) {
  Checkpoint ck = load_checkpoint(checkpoint);
  const Dataset ds = load_jsonl(data);
  const SplitIndices sp = stratified_split(ds, ck.train.split_train, ck.train.split_val,
                                           ck.train.split_test, ck.train.seed);
  std::vector<std::size_t> idx;
  if (split == "train") {
    idx = sp.train;
  } else if (split == "val") {
    idx = sp.val;
  } else if (split == "test") {
    idx = sp.test;
  } else if (split == "all") {
    for (std::size_t i = 0; i < ds.size(); ++i) idx.push_back(i);
  } else {
    throw InputError("unknown split: " + split);
  }
  std::vector<const std::vector<int>*> seqs;
  for (std::size_t i : idx) seqs.push_back(&ds.samples[i].actions);
  const auto scores = predict(seqs, ck.train, *ck.aux, *ck.main, *ck.pool);
  print_eval(split, evaluate_slice(ds, idx, scores));
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& data, const std::string& out) {
  Checkpoint ck = load_checkpoint(checkpoint);
  const Dataset ds = load_jsonl(data);
  std::vector<const std::vector<int>*> seqs;
  for (const auto& s : ds.samples) seqs.push_back(&s.actions);
  const auto scores = predict(seqs, ck.train, *ck.aux, *ck.main, *ck.pool);
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + out);
  os << "user_id,score\n";
  os.precision(10);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.samples[i].user_id << "," << scores[i] << "\n";
  }
  std::printf("wrote %zu scores to %s\n", scores.size(), out.c_str());
  return 0;
}

void print_summaries(const std::vector<RunRow>& rows) {
  for (const VariantSummary& s : summarize(rows)) {
    std::printf("%-6s runs=%d auc=%.6f±%.6f r@p0.9=%.6f±%.6f", s.variant.c_str(), s.runs,
                s.auc_mean, s.auc_std, s.r_at_p90_mean, s.r_at_p90_std);
    if (s.recall_camo_mean >= 0) {
      std::printf(" camo_recall=%.6f±%.6f", s.recall_camo_mean, s.recall_camo_std);
    }
    std::printf("\n");
  }
}

int cmd_ablate(const ExperimentConfig& cfg, const std::string& data, const std::string& variants,
               const std::string& seeds, const std::string& out) {
  const Dataset ds = load_jsonl(data);
  std::vector<Variant> vs;
  std::stringstream ss(variants);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) vs.push_back(variant_from_string(tok));
  }
  const auto rows = ablation_run(ds, TrainConfig::from(cfg), vs, parse_seeds(seeds));
  write_runs_csv(out, rows);
  print_summaries(rows);
  std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& data, const std::string& grid,
              const std::string& seeds, const std::string& out) {
  const Dataset ds = load_jsonl(data);
  const auto rows = sweep_run(ds, TrainConfig::from(cfg), parse_grid(grid), parse_seeds(seeds));
  write_runs_csv(out, rows);
  std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
  return 0;
}

int cmd_bench(const std::string& sizes_csv, int k, int dim, int n_queries, int threads,
              const std::string& out) {
  std::vector<std::size_t> sizes;
  {
    std::stringstream ss(sizes_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) sizes.push_back(std::stoull(tok));
    }
  }
  if (sizes.empty() || k < 1 || dim < 1 || n_queries < 1 || threads < 1) {
    throw InputError("bench: need sizes >= 1, k/dim/queries/threads >= 1");
  }

  std::ofstream os;
  std::ostream* csv = nullptr;
  if (!out.empty()) {
    os.open(out, std::ios::trunc);
    if (!os) throw InputError("cannot open for writing: " + out);
    csv = &os;
  }
  if (csv) *csv << "n,k,dim,threads,exact_qps,hnsw_qps,speedup\n";
  std::printf("%10s %4s %4s %8s %14s %14s %9s\n", "n", "k", "dim", "threads", "exact_qps",
              "hnsw_qps", "speedup");

  for (std::size_t n : sizes) {
    std::mt19937_64 rng(derive_seed(7, n));
    std::normal_distribution<float> dist(0.0f, 1.0f);
    VectorPool pool(dim);
    for (std::size_t i = 0; i < n; ++i) {
      VectorRecord r;
      r.id = i;
      r.label = static_cast<std::uint8_t>(i % 2);
      r.vector = VecF::NullaryExpr(dim, [&](int) { return dist(rng); });
      pool.add(std::move(r));
    }
    pool.freeze();
    std::vector<VecF> queries;
    for (int q = 0; q < n_queries; ++q) {
      queries.push_back(VecF::NullaryExpr(dim, [&](int) { return dist(rng); }));
    }

    auto timed = [&](auto&& fn) {
      const auto t0 = std::chrono::steady_clock::now();
      if (threads == 1) {
        for (const VecF& q : queries) fn(q);
      } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool_threads;
        for (int t = 0; t < threads; ++t) {
          pool_threads.emplace_back([&] {
            for (std::size_t i = next++; i < queries.size(); i = next++) fn(queries[i]);
          });
        }
        for (auto& th : pool_threads) th.join();
      }
      const auto t1 = std::chrono::steady_clock::now();
      return static_cast<double>(n_queries) / std::chrono::duration<double>(t1 - t0).count();
    };

    const double exact_qps = timed([&](const VecF& q) { (void)pool.knn(q, k); });
    pool.build_index(HnswParams{}, 7);
    const double hnsw_qps = timed([&](const VecF& q) { (void)pool.knn_approx(q, k); });
    const double speedup = hnsw_qps / exact_qps;
    std::printf("%10zu %4d %4d %8d %14.1f %14.1f %8.2fx\n", n, k, dim, threads, exact_qps,
                hnsw_qps, speedup);
    if (csv) {
      *csv << n << "," << k << "," << dim << "," << threads << "," << exact_qps << "," << hnsw_qps
           << "," << speedup << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cohort-augmented fraud detection pipeline"};
  app.require_subcommand(1);

  ConfigArgs gen_cfg, burnin_cfg, train_cfg, ablate_cfg, sweep_cfg;
  std::string out, data, out_dir, burnin_dir, checkpoint, split = "test";
  std::string variants = "base,BI,LA,full", seeds = "1,2,3,4,5", grid;
  std::string sizes = "1000,10000,100000";
  int k = 5, dim = 64, queries = 100, threads = 1;

  auto* s_datagen = app.add_subcommand("datagen", "Generate a synthetic labeled dataset");
  gen_cfg.attach(s_datagen);
  s_datagen->add_option("--out", out, "output JSONL path")->required();

  auto* s_burnin = app.add_subcommand("burnin", "Train the auxiliary model and build the pool");
  burnin_cfg.attach(s_burnin);
  s_burnin->add_option("--data", data, "JSONL dataset")->required();
  s_burnin->add_option("--out-dir", out_dir, "artifact directory")->required();

  auto* s_train = app.add_subcommand("train", "Cohort-augmented training (runs burn-in unless --burnin-dir)");
  train_cfg.attach(s_train);
  s_train->add_option("--data", data, "JSONL dataset")->required();
  s_train->add_option("--burnin-dir", burnin_dir, "reuse burn-in artifacts from this directory");
  s_train->add_option("--out-dir", out_dir, "artifact directory")->required();

  auto* s_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  s_eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  s_eval->add_option("--data", data, "JSONL dataset")->required();
  s_eval->add_option("--split", split, "train|val|test|all (default test)");

  auto* s_predict = app.add_subcommand("predict", "Score every sample in a dataset");
  s_predict->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  s_predict->add_option("--data", data, "JSONL dataset")->required();
  s_predict->add_option("--out", out, "output CSV path")->required();

  auto* s_ablate = app.add_subcommand("ablate", "Run model variants over several seeds");
  ablate_cfg.attach(s_ablate);
  s_ablate->add_option("--data", data, "JSONL dataset")->required();
  s_ablate->add_option("--variants", variants, "comma list of base,BI,LA,full");
  s_ablate->add_option("--seeds", seeds, "comma list of seeds");
  s_ablate->add_option("--out", out, "output CSV path")->required();

  auto* s_sweep = app.add_subcommand("sweep", "Grid sweep over alpha/beta/tau/K");
  sweep_cfg.attach(s_sweep);
  s_sweep->add_option("--data", data, "JSONL dataset")->required();
  s_sweep->add_option("--grid", grid, "e.g. \"alpha=0,0.001,1;K=1,2,4,8\"")->required();
  s_sweep->add_option("--seeds", seeds, "comma list of seeds");
  s_sweep->add_option("--out", out, "output CSV path")->required();

  auto* s_bench = app.add_subcommand("bench", "Exact vs indexed KNN throughput");
  s_bench->add_option("--sizes", sizes, "comma list of pool sizes");
  s_bench->add_option("--k", k, "neighbors per query");
  s_bench->add_option("--dim", dim, "vector dimension");
  s_bench->add_option("--queries", queries, "queries per size");
  s_bench->add_option("--threads", threads, "query worker threads");
  s_bench->add_option("--out", out, "optional output CSV path");

  try {
    app.parse(argc, argv);
    if (s_datagen->parsed()) return cmd_datagen(gen_cfg.resolve(), out);
    if (s_burnin->parsed()) return cmd_burnin(burnin_cfg.resolve(), data, out_dir);
    if (s_train->parsed()) return cmd_train(train_cfg.resolve(), data, burnin_dir, out_dir);
    if (s_eval->parsed()) return cmd_eval(checkpoint, data, split);
    if (s_predict->parsed()) return cmd_predict(checkpoint, data, out);
    if (s_ablate->parsed()) return cmd_ablate(ablate_cfg.resolve(), data, variants, seeds, out);
    if (s_sweep->parsed()) return cmd_sweep(sweep_cfg.resolve(), data, grid, seeds, out);
    if (s_bench->parsed()) return cmd_bench(sizes, k, dim, queries, threads, out);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1
  } catch (const vecaug::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const vecaug::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
