#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bsc {

// One scored candidate inside a query group. `gain` carries the graded
// relevance (used by nDCG); `relevant` is the binarized judgment used by the
// rank metrics. Equal scores are broken by ascending candidate id.
struct Candidate {
  std::int64_t id = 0;
  double score = 0.0;
  double gain = 0.0;
  bool relevant = false;
};

struct RankedGroup {
  std::string query_id;
  std::vector<Candidate> candidates;
};

// Candidates of one group ordered by (score desc, id asc).
std::vector<Candidate> ranked(const RankedGroup& group);

// Groups with no relevant candidate are excluded from the rank metrics and
// counted separately; `skipped` (when non-null) receives that count.
double mrr(const std::vector<RankedGroup>& groups, std::size_t* skipped = nullptr);
double mean_average_precision(const std::vector<RankedGroup>& groups,
                              std::size_t* skipped = nullptr);
double precision_at_1(const std::vector<RankedGroup>& groups,
                      std::size_t* skipped = nullptr);

// Gain 2^g - 1, log2(rank + 1) discount, normalized per group by the ideal
// ordering; groups with zero ideal DCG are skipped.
double ndcg_at_k(const std::vector<RankedGroup>& groups, std::size_t k,
                 std::size_t* skipped = nullptr);

// Fraction of groups with at least one relevant candidate in the top k.
double has_positives_at_k(const std::vector<RankedGroup>& groups, std::size_t k,
                          std::size_t* skipped = nullptr);

// Spearman rank correlation with average ranks for ties. A constant input on
// either side has no defined rank correlation and raises DomainError.
double spearman(const std::vector<double>& pred, const std::vector<double>& gold);

struct ThresholdedF1 {
  double threshold = 0.0;
  double dev_f1 = 0.0;
  double eval_f1 = 0.0;
};

// Chooses the threshold maximizing F1 on the dev scores by sweeping every
// midpoint between adjacent distinct dev scores (plus the all-positive and
// all-negative extremes), then scores the eval split at that threshold.
// Predictions are positive when score > threshold.
ThresholdedF1 f1_with_threshold(const std::vector<double>& dev_scores,
                                const std::vector<bool>& dev_labels,
                                const std::vector<double>& eval_scores,
                                const std::vector<bool>& eval_labels);

double f1_at_threshold(const std::vector<double>& scores,
                       const std::vector<bool>& labels, double threshold);

}  // namespace bsc
