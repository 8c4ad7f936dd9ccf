#include "vecaug/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace vecaug {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::BI: return "BI";
    case Variant::LA: return "LA";
    case Variant::Full: return "full";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "base") return Variant::Base;
  if (s == "BI" || s == "bi") return Variant::BI;
  if (s == "LA" || s == "la") return Variant::LA;
  if (s == "full") return Variant::Full;
  throw InputError("unknown variant: " + s + " (want base, BI, LA, full)");
}

TrainConfig variant_config(TrainConfig cfg, Variant v) {
  switch (v) {
    case Variant::Base:
      cfg.use_cohort = false;
      cfg.use_aggregation = false;
      cfg.weights.alpha = 0.0f;
      cfg.weights.beta = 0.0f;
      break;
    case Variant::BI:
      cfg.use_cohort = true;
      cfg.use_aggregation = true;
      cfg.weights.alpha = 0.0f;
      break;
    case Variant::LA:
      cfg.use_cohort = true;
      cfg.use_aggregation = false;
      break;
    case Variant::Full:
      cfg.use_cohort = true;
      cfg.use_aggregation = true;
      break;
  }
  return cfg;
}

namespace {

void apply_override(TrainConfig& cfg, const std::string& key, double value) {
  if (key == "alpha") {
    cfg.weights.alpha = static_cast<float>(value);
  } else if (key == "beta") {
    cfg.weights.beta = static_cast<float>(value);
  } else if (key == "tau") {
    cfg.weights.tau = static_cast<float>(value);
  } else if (key == "K") {
    cfg.k = static_cast<int>(std::lround(value));
  } else {
    throw InputError("sweep key must be one of alpha, beta, tau, K; got " + key);
  }
}

RunRow run_one(const Dataset& ds, const SplitIndices& split, const TrainConfig& cfg,
               const BurninModel& aux, const VectorPool& pool, const std::string& variant_name) {
  AugmentedModel model(aux.config(), cfg.seed);
  TrainLog log = augmented_train(ds, split.train, split.val, cfg, aux, pool, model);

  std::vector<const std::vector<int>*> seqs;
  seqs.reserve(split.test.size());
  for (std::size_t i : split.test) seqs.push_back(&ds.samples[i].actions);
  const std::vector<double> scores = predict(seqs, cfg, aux, model, pool);
  const EvalResult eval = evaluate_slice(ds, split.test, scores);

  RunRow row;
  row.variant = variant_name;
  row.seed = cfg.seed;
  row.auc = eval.auc;
  row.r_at_p90 = eval.r_at_p.count(0.9) ? eval.r_at_p.at(0.9) : 0.0;
  row.auc_camouflaged = eval.auc_camouflaged;
  row.recall_camo_at_p90 = eval.recall_at_p90_camouflaged;
  for (const EpochLog& e : log.entries) {
    if (e.split == "train" && e.epoch == log.best_epoch) row.best_loss = e.loss;
  }
  return row;
}

struct SeedContext {
  SplitIndices split;
  BurninModel aux;
  VectorPool pool;
};

SeedContext prepare_seed(const Dataset& ds, TrainConfig cfg, std::uint64_t seed,
                         const EncoderConfig& ecfg) {
  cfg.seed = seed;
  SeedContext ctx{stratified_split(ds, cfg.split_train, cfg.split_val, cfg.split_test, seed),
                  BurninModel(ecfg, seed), VectorPool(ecfg.embed_dim)};
  burnin_train(ds, ctx.split.train, ctx.split.val, cfg, ctx.aux, ctx.pool);
  return ctx;
}

EncoderConfig encoder_config_for(const Dataset& ds, const TrainConfig& cfg) {
  int vocab = 0;
  for (const auto& s : ds.samples) {
    for (int tok : s.actions) vocab = std::max(vocab, tok + 1);
  }
  EncoderConfig e;
  e.vocab_size = std::max(vocab, 1);
  e.embed_dim = cfg.n_d;
  e.kind = cfg.encoder;
  e.mlp_hidden = cfg.mlp_hidden;
  e.max_len = cfg.max_len;
  e.head_depth = cfg.head_depth;
  return e;
}

}  // namespace

std::vector<RunRow> ablation_run(const Dataset& ds, const TrainConfig& base,
                                 const std::vector<Variant>& variants,
                                 const std::vector<std::uint64_t>& seeds) {
  if (variants.empty() || seeds.empty()) throw InputError("ablation_run: empty variants or seeds");
  const EncoderConfig ecfg = encoder_config_for(ds, base);
  std::vector<RunRow> rows;
  for (std::uint64_t seed : seeds) {
    SeedContext ctx = prepare_seed(ds, base, seed, ecfg);
    for (Variant v : variants) {
      TrainConfig cfg = variant_config(base, v);
      cfg.seed = seed;
      rows.push_back(run_one(ds, ctx.split, cfg, ctx.aux, ctx.pool, to_string(v)));
    }
  }
  return rows;
}

std::vector<RunRow> sweep_run(const Dataset& ds, const TrainConfig& base, const SweepGrid& grid,
                              const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw InputError("sweep_run: empty seeds");
  // Expand the cartesian product of grid values.
  std::vector<std::map<std::string, double>> points{{}};
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw InputError("sweep_run: empty value list for " + key);
    std::vector<std::map<std::string, double>> next;
    for (const auto& p : points) {
      for (double v : values) {
        auto q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }

  const EncoderConfig ecfg = encoder_config_for(ds, base);
  std::vector<RunRow> rows;
  for (std::uint64_t seed : seeds) {
    SeedContext ctx = prepare_seed(ds, base, seed, ecfg);
    for (const auto& point : points) {
      TrainConfig cfg = variant_config(base, Variant::Full);
      cfg.seed = seed;
      for (const auto& [key, value] : point) apply_override(cfg, key, value);
      RunRow row = run_one(ds, ctx.split, cfg, ctx.aux, ctx.pool, "full");
      row.overrides = point;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<VariantSummary> summarize(const std::vector<RunRow>& rows) {
  std::vector<std::string> order;
  for (const RunRow& r : rows) {
    if (std::find(order.begin(), order.end(), r.variant) == order.end()) {
      order.push_back(r.variant);
    }
  }
  auto mean_std = [](const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v = xs.size() > 1 ? v / static_cast<double>(xs.size() - 1) : 0.0;
    return std::make_pair(m, std::sqrt(v));
  };
  std::vector<VariantSummary> out;
  for (const std::string& name : order) {
    std::vector<double> aucs, rps, camos;
    for (const RunRow& r : rows) {
      if (r.variant != name) continue;
      aucs.push_back(r.auc);
      rps.push_back(r.r_at_p90);
      if (r.recall_camo_at_p90 >= 0) camos.push_back(r.recall_camo_at_p90);
    }
    VariantSummary s;
    s.variant = name;
    s.runs = static_cast<int>(aucs.size());
    std::tie(s.auc_mean, s.auc_std) = mean_std(aucs);
    std::tie(s.r_at_p90_mean, s.r_at_p90_std) = mean_std(rps);
    if (!camos.empty()) std::tie(s.recall_camo_mean, s.recall_camo_std) = mean_std(camos);
    out.push_back(s);
  }
  return out;
}

void write_runs_csv(const std::string& path, const std::vector<RunRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path);
  // Grid keys (if any) are uniform across rows; collect them for the header.
  std::set<std::string> keys;
  for (const RunRow& r : rows) {
    for (const auto& [k, v] : r.overrides) keys.insert(k);
  }
  os << "variant,seed";
  for (const auto& k : keys) os << "," << k;
  os << ",auc,r_at_p90,auc_camouflaged_slice,recall_camo_at_p90,"
        "loss_main,loss_sccl,loss_align,loss_decay,loss_total\n";
  os.precision(10);
  for (const RunRow& r : rows) {
    os << r.variant << "," << r.seed;
    for (const auto& k : keys) {
      os << ",";
      auto it = r.overrides.find(k);
      if (it != r.overrides.end()) os << it->second;
    }
    os << "," << r.auc << "," << r.r_at_p90 << "," << r.auc_camouflaged << ","
       << r.recall_camo_at_p90 << "," << r.best_loss.main << "," << r.best_loss.sccl << ","
       << r.best_loss.align << "," << r.best_loss.decay << "," << r.best_loss.total << "\n";
  }
}

}  // namespace vecaug
