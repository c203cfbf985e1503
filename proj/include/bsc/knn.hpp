#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bsc/matrix.hpp"

namespace bsc {

enum class Metric { Dot, Cosine, Euclidean };

Metric parse_metric(std::string_view name);
std::string metric_name(Metric metric);

// Exact flat nearest-neighbor index. Immutable after construction;
// concurrent searches are safe.
class FlatIndex {
 public:
  // Cosine pre-normalizes the stored rows; all-zero rows are rejected there.
  FlatIndex(Matrix vectors, std::vector<std::int64_t> ids, Metric metric);

  std::size_t size() const { return vectors_.rows(); }
  std::size_t dim() const { return vectors_.cols(); }
  Metric metric() const { return metric_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }

  // Top-n ids ordered by decreasing similarity (increasing distance for
  // euclidean); ties broken by ascending id. Returns min(top_n, size()).
  std::vector<std::int64_t> search(std::span<const double> query,
                                   std::size_t top_n) const;

  // Two-stage lookup: search top_n first, then keep up to k ids outside
  // `used`, preserving rank order. May return fewer than k.
  std::vector<std::int64_t> filtered_top_k(
      std::span<const double> query, std::size_t top_n, std::size_t k,
      const std::unordered_set<std::int64_t>& used) const;

  // One search per query row; with threads > 1 the queries are distributed
  // over worker threads. Output is identical to the sequential version.
  std::vector<std::vector<std::int64_t>> search_batch(const Matrix& queries,
                                                      std::size_t top_n,
                                                      int threads = 1) const;

 private:
  Matrix vectors_;
  std::vector<std::int64_t> ids_;
  Metric metric_;
};

// Rank-preserving filter shared with the shuffling code: the first k entries
// of `ranked` that are not in `used`.
std::vector<std::int64_t> filter_used(const std::vector<std::int64_t>& ranked,
                                      std::size_t k,
                                      const std::unordered_set<std::int64_t>& used);

}  // namespace bsc
