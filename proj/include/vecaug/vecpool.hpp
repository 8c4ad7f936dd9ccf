#pragma once

#include "vecaug/common.hpp"
#include "vecaug/hnsw.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace vecaug {

struct VectorRecord {
  std::uint64_t id = 0;
  std::uint8_t label = 0;  // {0,1}
  VecF vector;
};

enum class LabelFilter { Any, Equals, NotEquals };

struct KnnFilter {
  LabelFilter kind = LabelFilter::Any;
  std::uint8_t label = 0;

  static KnnFilter any() { return {LabelFilter::Any, 0}; }
  static KnnFilter label_equals(std::uint8_t l) { return {LabelFilter::Equals, l}; }
  static KnnFilter label_not(std::uint8_t l) { return {LabelFilter::NotEquals, l}; }
};

struct KnnResult {
  std::uint64_t id;
  float distance;  // true Euclidean at the interface
};

/// The labeled burn-in vector database E_pool. Append-only; per-label
/// partitions back label-filtered search directly. After freeze() the pool is
/// read-only and queries may run concurrently.
class VectorPool {
 public:
  explicit VectorPool(int dim);

  int dim() const { return dim_; }
  std::size_t count() const { return records_.size(); }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  void add(VectorRecord record);
  const VectorRecord& record(std::uint64_t id) const;
  bool contains(std::uint64_t id) const { return by_id_.count(id) != 0; }
  const std::vector<VectorRecord>& records() const { return records_; }

  std::vector<KnnResult> knn(const VecF& query, int k, KnnFilter filter = KnnFilter::any(),
                             std::optional<std::uint64_t> exclude_id = std::nullopt) const;

  /// Builds per-label HNSW graphs. Pool must be frozen first.
  void build_index(const HnswParams& params, std::uint64_t seed = 0);
  bool indexed() const { return !indexes_.empty(); }
  std::vector<KnnResult> knn_approx(const VecF& query, int k, KnnFilter filter = KnnFilter::any(),
                                    int ef_search = 64,
                                    std::optional<std::uint64_t> exclude_id = std::nullopt) const;

  void save(const std::string& path) const;
  static VectorPool load(const std::string& path);

 private:
  int dim_;
  bool frozen_ = false;
  std::vector<VectorRecord> records_;
  std::unordered_map<std::uint64_t, std::size_t> by_id_;
  std::vector<std::size_t> partition_[2];  // record indexes per label
  // Per-label graphs; index i maps hnsw slots to partition_[i] entries.
  std::vector<std::unique_ptr<HnswIndex>> indexes_;
  HnswParams index_params_;
};

}  // namespace vecaug
