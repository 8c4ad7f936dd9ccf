#pragma once

#include "vecaug/common.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace vecaug {

struct HnswParams {
  int m = 16;
  int ef_construction = 200;
  int ef_search = 64;
};

/// Hierarchical navigable small-world graph over float vectors, squared
/// Euclidean metric. Items are referenced by dense internal slots; the caller
/// maps slots back to record ids.
class HnswIndex {
 public:
  HnswIndex(int dim, HnswParams params, std::uint64_t seed);

  void add(const float* vec);
  std::size_t size() const { return levels_.size(); }

  /// Returns up to k (slot, squared distance) pairs, ascending distance,
  /// ties by ascending slot.
  std::vector<std::pair<int, float>> search(const float* query, int k, int ef) const;

 private:
  float dist(const float* a, const float* b) const;
  const float* vec(int slot) const { return data_.data() + static_cast<std::size_t>(slot) * dim_; }
  std::vector<std::pair<float, int>> search_layer(const float* query, int entry, int level,
                                                  int ef) const;
  void connect(int slot, int level, std::vector<std::pair<float, int>>& candidates);

  int dim_;
  HnswParams params_;
  double level_mult_;
  std::mt19937_64 rng_;
  std::vector<float> data_;
  std::vector<int> levels_;
  // links_[level][slot] -> neighbor slots; level 0 allows 2*m links.
  std::vector<std::vector<std::vector<int>>> links_;
  int entry_point_ = -1;
  int max_level_ = -1;
  mutable std::vector<std::uint32_t> visited_;
  mutable std::uint32_t visit_epoch_ = 0;
};

}  // namespace vecaug
