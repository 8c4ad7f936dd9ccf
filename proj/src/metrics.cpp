#include "vecaug/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace vecaug {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw InputError("auc: scores and labels must be equal-length and nonempty");
  }
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y != 0);
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw InputError("auc: undefined for single-class input");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks within tie groups, then the Mann-Whitney rank-sum.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

struct PrefixScan {
  double best_recall = 0.0;
  double best_threshold = std::numeric_limits<double>::infinity();
};

PrefixScan scan_prefixes(const std::vector<double>& scores, const std::vector<int>& labels,
                         double p) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw InputError("recall_at_precision: scores and labels must be equal-length and nonempty");
  }
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y != 0);
  if (n_pos == 0) throw InputError("recall_at_precision: needs at least one positive");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  PrefixScan out;
  double tp = 0.0, taken = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      taken += 1.0;
      if (labels[order[k]] != 0) tp += 1.0;
    }
    const double precision = tp / taken;
    const double recall = tp / static_cast<double>(n_pos);
    if (precision >= p && recall > out.best_recall) {
      out.best_recall = recall;
      out.best_threshold = scores[order[i]];
    }
    i = j;
  }
  return out;
}

}  // namespace

double recall_at_precision(const std::vector<double>& scores, const std::vector<int>& labels,
                           double p) {
  return scan_prefixes(scores, labels, p).best_recall;
}

double precision_operating_threshold(const std::vector<double>& scores,
                                     const std::vector<int>& labels, double p) {
  return scan_prefixes(scores, labels, p).best_threshold;
}

}  // namespace vecaug
