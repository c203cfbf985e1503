#pragma once

#include <map>
#include <string>
#include <vector>

#include "bsc/dataset.hpp"
#include "bsc/encoder.hpp"
#include "bsc/metrics.hpp"

namespace bsc {

// How ranked groups are assembled from a pair dataset:
//   Groups    - records sharing a group key (or question text) form one
//               group; each record is a candidate scored by its own pair
//               cosine. The annotated-candidates setting.
//   Retrieval - every distinct question ranks the whole split's answer
//               pool; a candidate is relevant iff it is that question's
//               own positive pair. The database-matching setting.
//   Auto      - Groups when any record carries a group key, else Retrieval.
enum class EvalProtocol { Auto, Groups, Retrieval };

EvalProtocol parse_eval_protocol(std::string_view name);

struct EvalOptions {
  EvalProtocol protocol = EvalProtocol::Auto;
  double binarize_threshold = 0.5;  // label > t counts as relevant
  std::vector<std::string> metrics = {"mrr"};
};

struct GroupResult {
  std::string query_id;
  std::size_t size = 0;
  std::size_t relevant = 0;
  std::map<std::string, double> values;  // per-group metric values
};

struct EvalReport {
  std::map<std::string, double> values;
  std::size_t groups_total = 0;
  std::size_t groups_skipped = 0;  // groups with no relevant candidate
  std::vector<GroupResult> per_group;

  std::string to_json_text() const;
  std::string to_table_text() const;
  std::string per_group_csv() const;
};

// Cosine similarity of two embedding rows (zero vectors score 0).
double cosine_score(std::span<const double> x, std::span<const double> y);

// Encodes both sides of every record and assembles the ranked groups.
std::vector<RankedGroup> build_groups(const PairDataset& records,
                                      const EncoderModel& model,
                                      const EvalOptions& opts);

// Computes every requested metric. Metric names: mrr, map, p@1, ndcg@K,
// hp@K, spearman, f1 (K a positive integer, e.g. "ndcg@5").
EvalReport evaluate(const PairDataset& records, const EncoderModel& model,
                    const EvalOptions& opts);

// Single dev-selection score used by the trainer.
double evaluate_metric(const PairDataset& records, const EncoderModel& model,
                       const std::string& metric, EvalProtocol protocol,
                       double binarize_threshold);

}  // namespace bsc
