#include "vecaug/vecpool.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace vecaug {

namespace {

constexpr char kMagic[4] = {'V', 'P', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

float squared_distance(const float* a, const float* b, int dim) {
  float s = 0.0f;
  for (int i = 0; i < dim; ++i) {
    const float d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

template <class T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_le(std::istream& is, std::size_t& offset) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    throw FormatError("pool file truncated at byte offset " + std::to_string(offset));
  }
  offset += sizeof(T);
  return v;
}

}  // namespace

VectorPool::VectorPool(int dim) : dim_(dim) {
  if (dim <= 0) throw InputError("pool dim must be positive");
}

void VectorPool::add(VectorRecord record) {
  if (frozen_) throw StateError("pool is frozen");
  if (record.vector.size() != dim_) {
    throw InputError("record dim " + std::to_string(record.vector.size()) +
                     " does not match pool dim " + std::to_string(dim_));
  }
  if (record.label > 1) throw InputError("record label must be 0 or 1");
  if (by_id_.count(record.id) != 0) {
    throw ConflictError("duplicate record id " + std::to_string(record.id));
  }
  by_id_.emplace(record.id, records_.size());
  partition_[record.label].push_back(records_.size());
  records_.push_back(std::move(record));
}

const VectorRecord& VectorPool::record(std::uint64_t id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw InputError("unknown record id " + std::to_string(id));
  return records_[it->second];
}

std::vector<KnnResult> VectorPool::knn(const VecF& query, int k, KnnFilter filter,
                                       std::optional<std::uint64_t> exclude_id) const {
  if (query.size() != dim_) {
    throw InputError("query dim " + std::to_string(query.size()) + " does not match pool dim " +
                     std::to_string(dim_));
  }
  if (k < 1) throw InputError("knn: k must be >= 1");

  auto scan = [&](const std::vector<std::size_t>& idxs,
                  std::vector<std::pair<float, std::uint64_t>>& out) {
    for (std::size_t ri : idxs) {
      const VectorRecord& r = records_[ri];
      if (exclude_id && r.id == *exclude_id) continue;
      out.emplace_back(squared_distance(query.data(), r.vector.data(), dim_), r.id);
    }
  };

  std::vector<std::pair<float, std::uint64_t>> cand;
  cand.reserve(records_.size());
  switch (filter.kind) {
    case LabelFilter::Any:
      scan(partition_[0], cand);
      scan(partition_[1], cand);
      break;
    case LabelFilter::Equals:
      scan(partition_[filter.label], cand);
      break;
    case LabelFilter::NotEquals:
      scan(partition_[1 - filter.label], cand);
      break;
  }
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
  std::vector<KnnResult> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back(KnnResult{cand[i].second, std::sqrt(cand[i].first)});
  }
  return out;
}

void VectorPool::build_index(const HnswParams& params, std::uint64_t seed) {
  if (!frozen_) throw StateError("build_index: freeze the pool first");
  index_params_ = params;
  indexes_.clear();
  for (int label = 0; label < 2; ++label) {
    auto idx = std::make_unique<HnswIndex>(dim_, params, derive_seed(seed, 77 + label));
    for (std::size_t ri : partition_[label]) {
      idx->add(records_[ri].vector.data());
    }
    indexes_.push_back(std::move(idx));
  }
}

std::vector<KnnResult> VectorPool::knn_approx(const VecF& query, int k, KnnFilter filter,
                                              int ef_search,
                                              std::optional<std::uint64_t> exclude_id) const {
  if (indexes_.empty()) throw StateError("knn_approx: index not built");
  if (query.size() != dim_) {
    throw InputError("query dim does not match pool dim");
  }
  if (k < 1) throw InputError("knn_approx: k must be >= 1");

  // Fetch one extra so a post-hoc exclusion cannot shrink the result below k.
  const int fetch = k + (exclude_id ? 1 : 0);
  std::vector<std::pair<float, std::uint64_t>> merged;
  auto query_label = [&](int label) {
    auto hits = indexes_[static_cast<std::size_t>(label)]->search(query.data(), fetch,
                                                                 std::max(ef_search, fetch));
    for (const auto& [slot, d2] : hits) {
      const VectorRecord& r = records_[partition_[label][static_cast<std::size_t>(slot)]];
      if (exclude_id && r.id == *exclude_id) continue;
      merged.emplace_back(d2, r.id);
    }
  };
  switch (filter.kind) {
    case LabelFilter::Any:
      query_label(0);
      query_label(1);
      break;
    case LabelFilter::Equals:
      query_label(filter.label);
      break;
    case LabelFilter::NotEquals:
      query_label(1 - filter.label);
      break;
  }
  std::sort(merged.begin(), merged.end());
  std::vector<KnnResult> out;
  for (const auto& [d2, id] : merged) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(KnnResult{id, std::sqrt(d2)});
  }
  return out;
}

void VectorPool::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open for writing: " + path);
  os.write(kMagic, 4);
  write_le(os, kVersion);
  write_le(os, static_cast<std::uint32_t>(dim_));
  write_le(os, static_cast<std::uint64_t>(records_.size()));
  const char pad[3] = {0, 0, 0};
  for (const VectorRecord& r : records_) {
    write_le(os, r.id);
    write_le(os, r.label);
    os.write(pad, 3);
    os.write(reinterpret_cast<const char*>(r.vector.data()),
             static_cast<std::streamsize>(sizeof(float)) * dim_);
  }
  if (!os) throw InputError("write failed: " + path);
}

VectorPool VectorPool::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open pool file: " + path);
  std::size_t offset = 0;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad magic in pool file at byte offset 0");
  }
  offset = 4;
  const auto version = read_le<std::uint32_t>(is, offset);
  if (version != kVersion) {
    throw FormatError("unsupported pool version " + std::to_string(version) +
                      " at byte offset 4");
  }
  const auto dim = read_le<std::uint32_t>(is, offset);
  const auto count = read_le<std::uint64_t>(is, offset);
  VectorPool pool(static_cast<int>(dim));
  for (std::uint64_t i = 0; i < count; ++i) {
    VectorRecord r;
    r.id = read_le<std::uint64_t>(is, offset);
    r.label = read_le<std::uint8_t>(is, offset);
    char pad[3];
    is.read(pad, 3);
    if (!is) throw FormatError("pool file truncated at byte offset " + std::to_string(offset));
    offset += 3;
    r.vector.resize(dim);
    is.read(reinterpret_cast<char*>(r.vector.data()),
            static_cast<std::streamsize>(sizeof(float)) * dim);
    if (!is) throw FormatError("pool file truncated at byte offset " + std::to_string(offset));
    offset += sizeof(float) * dim;
    pool.add(std::move(r));
  }
  return pool;
}

}  // namespace vecaug
