#include "vecaug/config.hpp"

#include <fstream>
#include <sstream>

namespace vecaug {

ExperimentConfig::ExperimentConfig() {
  // Generator defaults.
  values_["n_users"] = "10000";
  values_["pos_rate"] = "0.01";
  values_["vocab_size"] = "653";
  values_["seq_len_min"] = "50";
  values_["seq_len_max"] = "300";
  values_["n_fraud_entities"] = "10";
  values_["accounts_min"] = "2";
  values_["accounts_max"] = "30";
  values_["camouflage_ratio"] = "0";
  values_["camouflaged_fraction"] = "0";
  // Training defaults.
  values_["seed"] = "42";
  values_["K"] = "5";
  values_["n_d"] = "64";
  values_["batch_size"] = "128";
  values_["lr"] = "0.0001";
  values_["alpha"] = "0.001";
  values_["beta"] = "0.00001";
  values_["tau"] = "1.0";
  values_["lambda"] = "0.00001";
  values_["max_epochs"] = "100";
  values_["patience"] = "20";
  values_["encoder"] = "mean-pool-mlp";
  values_["mlp_hidden"] = "64";
  values_["head_depth"] = "1";
  values_["max_len"] = "300";
  values_["split_train"] = "0.6";
  values_["split_val"] = "0.2";
  values_["split_test"] = "0.2";
  values_["dis"] = "squared_prob";
  values_["use_cohort"] = "true";
  values_["use_aggregation"] = "true";
  // Index defaults.
  values_["use_hnsw"] = "false";
  values_["hnsw_m"] = "16";
  values_["hnsw_ef_construction"] = "200";
  values_["hnsw_ef_search"] = "64";
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw InputError("unknown config key: " + key);
  it->second = value;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InputError("unknown config key: " + key);
  return it->second;
}

int ExperimentConfig::get_int(const std::string& key) const {
  try {
    return std::stoi(get(key));
  } catch (const std::exception&) {
    throw InputError("config key " + key + " is not an integer: " + get(key));
  }
}

double ExperimentConfig::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const std::exception&) {
    throw InputError("config key " + key + " is not a number: " + get(key));
  }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config key " + key + " is not a boolean: " + v);
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  try {
    return std::stoull(get(key));
  } catch (const std::exception&) {
    throw InputError("config key " + key + " is not an unsigned integer: " + get(key));
  }
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("bad config line " + std::to_string(lineno) + " in " + path);
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void ExperimentConfig::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path);
  for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
}

}  // namespace vecaug
