#include "vecaug/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

namespace vecaug {

using json = nlohmann::ordered_json;

Dataset load_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open dataset file: " + path);
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("bad JSON at " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    BehaviorSequence s;
    try {
      s.user_id = j.at("user_id").get<std::string>();
      s.label = j.at("label").get<int>();
      s.actions = j.at("actions").get<std::vector<int>>();
      if (j.contains("entity_id") && !j["entity_id"].is_null()) {
        s.entity_id = j["entity_id"].get<std::string>();
      }
      if (j.contains("camouflaged")) s.camouflaged = j["camouflaged"].get<bool>();
    } catch (const json::exception& e) {
      throw FormatError("bad record at " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (s.label != 0 && s.label != 1) {
      throw FormatError("label must be 0 or 1 at " + path + ":" + std::to_string(lineno));
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path);
  for (const BehaviorSequence& s : ds.samples) {
    json j;
    j["user_id"] = s.user_id;
    j["label"] = s.label;
    j["actions"] = s.actions;
    if (s.entity_id) {
      j["entity_id"] = *s.entity_id;
    } else {
      j["entity_id"] = nullptr;
    }
    j["camouflaged"] = s.camouflaged;
    os << j.dump() << "\n";
  }
  if (!os) throw InputError("write failed: " + path);
}

SplitIndices stratified_split(const Dataset& ds, double f_train, double f_val, double f_test,
                              std::uint64_t seed) {
  if (ds.samples.empty()) throw InputError("split: empty dataset");
  if (std::abs(f_train + f_val + f_test - 1.0) > 1e-9 || f_train <= 0 || f_val < 0 || f_test < 0) {
    throw InputError("split: fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> by_label[2];
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    by_label[ds.samples[i].label].push_back(i);
  }
  SplitIndices out;
  for (int label = 0; label < 2; ++label) {
    auto& idx = by_label[label];
    std::mt19937_64 rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(label)));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n = idx.size();
    std::size_t n_train = static_cast<std::size_t>(std::lround(f_train * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::lround(f_val * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train) {
        out.train.push_back(idx[i]);
      } else if (i < n_train + n_val) {
        out.val.push_back(idx[i]);
      } else {
        out.test.push_back(idx[i]);
      }
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  auto check = [&](const std::vector<std::size_t>& split, const char* name) {
    bool has[2] = {false, false};
    for (std::size_t i : split) has[ds.samples[i].label] = true;
    if (!split.empty() && (!has[0] || !has[1])) {
      std::cerr << "warning: " << name << " split contains a single class only\n";
    }
  };
  check(out.train, "train");
  check(out.val, "val");
  check(out.test, "test");
  return out;
}

}  // namespace vecaug
