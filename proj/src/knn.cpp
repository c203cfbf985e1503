#include "bsc/knn.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "bsc/errors.hpp"

namespace bsc {

Metric parse_metric(std::string_view name) {
  if (name == "dot") return Metric::Dot;
  if (name == "cosine") return Metric::Cosine;
  if (name == "euclidean") return Metric::Euclidean;
  throw ValidationError("unknown metric: " + std::string(name));
}

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::Dot: return "dot";
    case Metric::Cosine: return "cosine";
    case Metric::Euclidean: return "euclidean";
  }
  return "dot";
}

namespace {

void l2_normalize_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) s += m(i, c) * m(i, c);
    double n = std::sqrt(s);
    if (n == 0.0)
      throw DomainError("FlatIndex(cosine): all-zero vector at row " + std::to_string(i));
    for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) /= n;
  }
}

}  // namespace

FlatIndex::FlatIndex(Matrix vectors, std::vector<std::int64_t> ids, Metric metric)
    : vectors_(std::move(vectors)), ids_(std::move(ids)), metric_(metric) {
  if (vectors_.rows() == 0) throw ContractError("FlatIndex: empty vector set");
  if (ids_.size() != vectors_.rows())
    throw ContractError("FlatIndex: id count does not match vector count");
  require_finite(vectors_, "FlatIndex.vectors");
  std::unordered_set<std::int64_t> seen;
  for (std::int64_t id : ids_)
    if (!seen.insert(id).second)
      throw ContractError("FlatIndex: duplicate id " + std::to_string(id));
  if (metric_ == Metric::Cosine) l2_normalize_rows(vectors_);
}

std::vector<std::int64_t> FlatIndex::search(std::span<const double> query,
                                            std::size_t top_n) const {
  if (query.size() != dim())
    throw ShapeError("FlatIndex::search: query dimension " + std::to_string(query.size()) +
                     " != index dimension " + std::to_string(dim()));
  if (top_n < 1) throw ContractError("FlatIndex::search: top_n must be >= 1");

  std::vector<double> q(query.begin(), query.end());
  if (metric_ == Metric::Cosine) {
    double s = 0.0;
    for (double v : q) s += v * v;
    double n = std::sqrt(s);
    if (n > 0.0)
      for (double& v : q) v /= n;
  }

  std::size_t count = size();
  // Scores oriented so that larger is always better.
  std::vector<std::pair<double, std::int64_t>> scored(count);
  for (std::size_t r = 0; r < count; ++r) {
    double s = 0.0;
    if (metric_ == Metric::Euclidean) {
      for (std::size_t c = 0; c < dim(); ++c) {
        double d = vectors_(r, c) - q[c];
        s -= d * d;
      }
    } else {
      for (std::size_t c = 0; c < dim(); ++c) s += vectors_(r, c) * q[c];
    }
    scored[r] = {s, ids_[r]};
  }

  std::size_t keep = std::min(top_n, count);
  auto better = [](const std::pair<double, std::int64_t>& x,
                   const std::pair<double, std::int64_t>& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;  // tie-break by ascending id
  };
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(), better);

  std::vector<std::int64_t> out(keep);
  for (std::size_t i = 0; i < keep; ++i) out[i] = scored[i].second;
  return out;
}

std::vector<std::int64_t> filter_used(const std::vector<std::int64_t>& ranked,
                                      std::size_t k,
                                      const std::unordered_set<std::int64_t>& used) {
  std::vector<std::int64_t> out;
  out.reserve(std::min(k, ranked.size()));
  for (std::int64_t id : ranked) {
    if (out.size() == k) break;
    if (!used.contains(id)) out.push_back(id);
  }
  return out;
}

std::vector<std::int64_t> FlatIndex::filtered_top_k(
    std::span<const double> query, std::size_t top_n, std::size_t k,
    const std::unordered_set<std::int64_t>& used) const {
  if (k > top_n) throw ContractError("filtered_top_k: k must be <= top_n");
  return filter_used(search(query, top_n), k, used);
}

std::vector<std::vector<std::int64_t>> FlatIndex::search_batch(
    const Matrix& queries, std::size_t top_n, int threads) const {
  std::vector<std::vector<std::int64_t>> out(queries.rows());
  if (threads <= 1) {
    for (std::size_t i = 0; i < queries.rows(); ++i)
      out[i] = search(queries.row(i), top_n);
    return out;
  }
  // Static partition: each worker owns a fixed slot range, so the result is
  // independent of scheduling.
  std::size_t n = queries.rows();
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers)
        out[i] = search(queries.row(i), top_n);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace bsc
