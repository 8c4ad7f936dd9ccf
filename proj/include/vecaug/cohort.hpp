#pragma once

#include "vecaug/vecpool.hpp"

#include <optional>
#include <vector>

namespace vecaug {

/// Per-target neighbor sets: augmentation neighbors E^a (any label) and
/// negative neighbors E^n (opposite label, training only).
struct CohortSet {
  std::optional<std::uint64_t> target_id;
  std::vector<std::pair<std::uint64_t, VecF>> aug;
  std::vector<std::pair<std::uint64_t, VecF>> neg;
};

enum class CohortMode { Train, Infer };

struct CohortOptions {
  bool use_approx = false;
  int ef_search = 64;
};

inline CohortSet identify_cohort(const VectorPool& pool, const VecF& query, int k, CohortMode mode,
                                 std::optional<std::uint64_t> target_id = std::nullopt,
                                 std::optional<int> target_label = std::nullopt,
                                 CohortOptions opts = {}) {
  if (mode == CohortMode::Train && (!target_id || !target_label)) {
    throw InputError("identify_cohort: train mode requires target id and label");
  }
  auto run = [&](KnnFilter filter, std::optional<std::uint64_t> exclude) {
    return opts.use_approx ? pool.knn_approx(query, k, filter, opts.ef_search, exclude)
                           : pool.knn(query, k, filter, exclude);
  };

  CohortSet out;
  out.target_id = mode == CohortMode::Train ? target_id : std::nullopt;
  auto fill = [&](const std::vector<KnnResult>& hits,
                  std::vector<std::pair<std::uint64_t, VecF>>& dst) {
    dst.reserve(hits.size());
    for (const KnnResult& h : hits) dst.emplace_back(h.id, pool.record(h.id).vector);
  };
  if (mode == CohortMode::Train) {
    // A sample's own burn-in vector sits at distance 0 and would leak its
    // label; exclude it by id.
    fill(run(KnnFilter::any(), target_id), out.aug);
    fill(run(KnnFilter::label_not(static_cast<std::uint8_t>(*target_label)), target_id), out.neg);
  } else {
    fill(run(KnnFilter::any(), std::nullopt), out.aug);
  }
  return out;
}

}  // namespace vecaug
