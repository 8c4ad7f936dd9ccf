#pragma once

#include "vecaug/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vecaug {

/// One user's labeled action-token sequence. entity_id and camouflaged are
/// generator provenance tags for evaluation slicing only; they never reach a
/// model input path.
struct BehaviorSequence {
  std::string user_id;
  int label = 0;
  std::vector<int> actions;
  std::optional<std::string> entity_id;
  bool camouflaged = false;
};

struct Dataset {
  std::vector<BehaviorSequence> samples;

  std::size_t size() const { return samples.size(); }
  /// Stable numeric sample id: position in the loaded file.
  std::uint64_t sample_id(std::size_t index) const { return static_cast<std::uint64_t>(index); }
};

Dataset load_jsonl(const std::string& path);
void save_jsonl(const Dataset& ds, const std::string& path);

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Seed-deterministic stratified split; fractions must sum to 1. Prints a
/// warning to stderr when a split misses a class entirely.
SplitIndices stratified_split(const Dataset& ds, double f_train, double f_val, double f_test,
                              std::uint64_t seed);

}  // namespace vecaug
