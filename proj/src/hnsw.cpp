#include "vecaug/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace vecaug {

HnswIndex::HnswIndex(int dim, HnswParams params, std::uint64_t seed)
    : dim_(dim), params_(params), level_mult_(1.0 / std::log(static_cast<double>(params.m))),
      rng_(seed) {}

float HnswIndex::dist(const float* a, const float* b) const {
  float s = 0.0f;
  for (int i = 0; i < dim_; ++i) {
    const float d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::pair<float, int>> HnswIndex::search_layer(const float* query, int entry,
                                                           int level, int ef) const {
  ++visit_epoch_;
  if (visited_.size() < levels_.size()) visited_.resize(levels_.size(), 0);
  auto mark = [this](int s) { visited_[static_cast<std::size_t>(s)] = visit_epoch_; };
  auto seen = [this](int s) { return visited_[static_cast<std::size_t>(s)] == visit_epoch_; };

  using Item = std::pair<float, int>;
  // candidates: min-heap by distance; result: max-heap by distance.
  std::priority_queue<Item, std::vector<Item>, std::greater<>> candidates;
  std::priority_queue<Item> result;
  const float d0 = dist(query, vec(entry));
  candidates.emplace(d0, entry);
  result.emplace(d0, entry);
  mark(entry);
  while (!candidates.empty()) {
    auto [dc, c] = candidates.top();
    if (dc > result.top().first && static_cast<int>(result.size()) >= ef) break;
    candidates.pop();
    for (int nb : links_[static_cast<std::size_t>(level)][static_cast<std::size_t>(c)]) {
      if (seen(nb)) continue;
      mark(nb);
      const float d = dist(query, vec(nb));
      if (static_cast<int>(result.size()) < ef || d < result.top().first) {
        candidates.emplace(d, nb);
        result.emplace(d, nb);
        if (static_cast<int>(result.size()) > ef) result.pop();
      }
    }
  }
  std::vector<Item> out;
  out.reserve(result.size());
  while (!result.empty()) {
    out.push_back(result.top());
    result.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void HnswIndex::connect(int slot, int level, std::vector<std::pair<float, int>>& candidates) {
  const int max_links = level == 0 ? 2 * params_.m : params_.m;
  std::sort(candidates.begin(), candidates.end());
  auto& own = links_[static_cast<std::size_t>(level)][static_cast<std::size_t>(slot)];
  for (const auto& [d, nb] : candidates) {
    if (static_cast<int>(own.size()) >= max_links) break;
    own.push_back(nb);
    auto& theirs = links_[static_cast<std::size_t>(level)][static_cast<std::size_t>(nb)];
    theirs.push_back(slot);
    if (static_cast<int>(theirs.size()) > max_links) {
      // Shrink to the closest max_links neighbors.
      std::vector<std::pair<float, int>> scored;
      scored.reserve(theirs.size());
      for (int t : theirs) scored.emplace_back(dist(vec(nb), vec(t)), t);
      std::sort(scored.begin(), scored.end());
      theirs.clear();
      for (int i = 0; i < max_links; ++i) theirs.push_back(scored[static_cast<std::size_t>(i)].second);
    }
  }
}

void HnswIndex::add(const float* v) {
  const int slot = static_cast<int>(levels_.size());
  data_.insert(data_.end(), v, v + dim_);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng_);
  if (u < 1e-12) u = 1e-12;
  const int level = static_cast<int>(-std::log(u) * level_mult_);
  levels_.push_back(level);
  while (static_cast<int>(links_.size()) <= level) links_.emplace_back();
  for (auto& layer : links_) layer.resize(levels_.size());

  if (entry_point_ < 0) {
    entry_point_ = slot;
    max_level_ = level;
    return;
  }

  int ep = entry_point_;
  for (int l = max_level_; l > level; --l) {
    auto best = search_layer(v, ep, l, 1);
    ep = best.front().second;
  }
  for (int l = std::min(level, max_level_); l >= 0; --l) {
    auto candidates = search_layer(v, ep, l, params_.ef_construction);
    ep = candidates.front().second;
    connect(slot, l, candidates);
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_point_ = slot;
  }
}

std::vector<std::pair<int, float>> HnswIndex::search(const float* query, int k, int ef) const {
  std::vector<std::pair<int, float>> out;
  if (entry_point_ < 0) return out;
  int ep = entry_point_;
  for (int l = max_level_; l > 0; --l) {
    auto best = search_layer(query, ep, l, 1);
    ep = best.front().second;
  }
  auto found = search_layer(query, ep, 0, std::max(ef, k));
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  });
  for (const auto& [d, slot] : found) {
    if (static_cast<int>(out.size()) >= k) break;
    out.emplace_back(slot, d);
  }
  return out;
}

}  // namespace vecaug
