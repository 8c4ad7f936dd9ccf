#pragma once

#include "vecaug/common.hpp"

#include <map>
#include <vector>

namespace vecaug {

struct EvalResult {
  double auc = 0.0;
  std::map<double, double> r_at_p;  // precision threshold -> recall
  double recall_at_p90_camouflaged = -1.0;  // -1 when no camouflaged positives
  double auc_camouflaged = -1.0;
};

/// Mann-Whitney AUC; ties count one half. Throws on single-class input.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Best recall over score-descending prefixes whose precision reaches p.
/// Whole tie groups are included together; 0 when no prefix qualifies.
double recall_at_precision(const std::vector<double>& scores, const std::vector<int>& labels,
                           double p = 0.9);

/// Score threshold of the best qualifying prefix for recall_at_precision;
/// returns +inf when no prefix qualifies. Samples scoring >= the threshold
/// form the operating set.
double precision_operating_threshold(const std::vector<double>& scores,
                                     const std::vector<int>& labels, double p = 0.9);

}  // namespace vecaug
