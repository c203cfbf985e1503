#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bsc/errors.hpp"
#include "bsc/knn.hpp"
#include "bsc/rng.hpp"

using namespace bsc;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.next_real(-1.0, 1.0);
  return m;
}

std::vector<std::int64_t> sequential_ids(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
  return ids;
}

// Independent oracle: full sort of brute-force scores with the same
// orientation and tie-break.
std::vector<std::int64_t> brute_force(const Matrix& data,
                                      const std::vector<std::int64_t>& ids,
                                      std::span<const double> query, Metric metric,
                                      std::size_t top_n) {
  std::vector<double> q(query.begin(), query.end());
  Matrix vecs = data;
  if (metric == Metric::Cosine) {
    auto norm = [](std::span<const double> v) {
      double s = 0.0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    };
    for (std::size_t r = 0; r < vecs.rows(); ++r) {
      double n = norm(vecs.row(r));
      for (std::size_t c = 0; c < vecs.cols(); ++c) vecs(r, c) /= n;
    }
    double n = norm(q);
    if (n > 0) for (double& x : q) x /= n;
  }
  std::vector<std::pair<double, std::int64_t>> scored;
  for (std::size_t r = 0; r < vecs.rows(); ++r) {
    double s = 0.0;
    if (metric == Metric::Euclidean) {
      for (std::size_t c = 0; c < vecs.cols(); ++c) {
        double d = vecs(r, c) - q[c];
        s -= d * d;
      }
    } else {
      for (std::size_t c = 0; c < vecs.cols(); ++c) s += vecs(r, c) * q[c];
    }
    scored.emplace_back(s, ids[r]);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < std::min(top_n, scored.size()); ++i)
    out.push_back(scored[i].second);
  return out;
}

}  // namespace

TEST_CASE("index construction contracts") {
  CHECK_THROWS_AS(FlatIndex(Matrix(0, 3), {}, Metric::Dot), ContractError);
  Matrix m = Matrix::from_rows({{1, 0}, {0, 1}});
  CHECK_THROWS_AS(FlatIndex(m, {1, 1}, Metric::Dot), ContractError);
  CHECK_THROWS_AS(FlatIndex(m, {1}, Metric::Dot), ContractError);
  Matrix z = Matrix::from_rows({{0, 0}});
  CHECK_THROWS_AS(FlatIndex(z, {0}, Metric::Cosine), DomainError);
}

TEST_CASE("self-query on unit axes returns self first under cosine") {
  Matrix m = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  FlatIndex index(m, {10, 20, 30}, Metric::Cosine);
  for (std::size_t r = 0; r < 3; ++r) {
    auto hits = index.search(m.row(r), 1);
    CHECK(hits.size() == 1);
    CHECK(hits[0] == index.ids()[r]);
  }
}

TEST_CASE("euclidean number-line ordering") {
  Matrix m = Matrix::from_rows({{0.0}, {1.0}, {5.0}});
  FlatIndex index(m, {0, 1, 2}, Metric::Euclidean);
  std::vector<double> query = {0.9};
  auto hits = index.search(query, 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0] == 1);
  CHECK(hits[1] == 0);
}

TEST_CASE("dimension mismatch raises a shape error") {
  Matrix m = Matrix::from_rows({{1, 0}, {0, 1}});
  FlatIndex index(m, {0, 1}, Metric::Dot);
  std::vector<double> bad = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(index.search(bad, 1), ShapeError);
}

TEST_CASE("search equals the brute-force oracle on all metrics") {
  Rng rng(71);
  for (Metric metric : {Metric::Dot, Metric::Cosine, Metric::Euclidean}) {
    Matrix data = random_matrix(rng, 100, 8);
    auto ids = sequential_ids(100);
    FlatIndex index(data, ids, metric);
    for (int rep = 0; rep < 10; ++rep) {
      Matrix qm = random_matrix(rng, 1, 8);
      auto got = index.search(qm.row(0), 10);
      auto want = brute_force(data, ids, qm.row(0), metric, 10);
      CHECK(got == want);
    }
  }
}

TEST_CASE("ties break by ascending id") {
  // Duplicate vectors: scores are bit-identical, so order must come from ids.
  Matrix m = Matrix::from_rows({{1, 0}, {1, 0}, {1, 0}});
  FlatIndex index(m, {42, 7, 99}, Metric::Dot);
  std::vector<double> q = {1.0, 0.0};
  auto hits = index.search(q, 3);
  CHECK(hits == std::vector<std::int64_t>{7, 42, 99});
}

TEST_CASE("top_n larger than the index returns everything") {
  Matrix m = Matrix::from_rows({{1, 0}, {0, 1}});
  FlatIndex index(m, {0, 1}, Metric::Dot);
  std::vector<double> q = {1.0, 0.5};
  CHECK(index.search(q, 10).size() == 2);
}

TEST_CASE("filtered_top_k") {
  Rng rng(72);
  Matrix data = random_matrix(rng, 50, 6);
  auto ids = sequential_ids(50);
  FlatIndex index(data, ids, Metric::Cosine);
  Matrix qm = random_matrix(rng, 1, 6);
  auto ranked = index.search(qm.row(0), 20);

  SUBCASE("empty used set gives a prefix of search") {
    auto got = index.filtered_top_k(qm.row(0), 20, 5, {});
    CHECK(got == std::vector<std::int64_t>(ranked.begin(), ranked.begin() + 5));
  }
  SUBCASE("fully used index gives an empty result") {
    std::unordered_set<std::int64_t> used(ids.begin(), ids.end());
    CHECK(index.filtered_top_k(qm.row(0), 20, 5, used).empty());
  }
  SUBCASE("used prefix yields the next ranked ids") {
    std::unordered_set<std::int64_t> used(ranked.begin(), ranked.begin() + 10);
    auto got = index.filtered_top_k(qm.row(0), 20, 5, used);
    CHECK(got == std::vector<std::int64_t>(ranked.begin() + 10, ranked.begin() + 15));
    for (std::int64_t id : got) CHECK(!used.contains(id));
  }
  SUBCASE("k above top_n is a contract error") {
    CHECK_THROWS_AS(index.filtered_top_k(qm.row(0), 5, 6, {}), ContractError);
  }
}

TEST_CASE("cosine search ignores positive query rescaling") {
  Rng rng(73);
  Matrix data = random_matrix(rng, 40, 5);
  FlatIndex index(data, sequential_ids(40), Metric::Cosine);
  Matrix qm = random_matrix(rng, 1, 5);
  std::vector<double> scaled(qm.row(0).begin(), qm.row(0).end());
  for (double& v : scaled) v *= 37.5;
  CHECK(index.search(qm.row(0), 10) == index.search(scaled, 10));
}

TEST_CASE("parallel batch search equals sequential") {
  Rng rng(74);
  Matrix data = random_matrix(rng, 200, 8);
  FlatIndex index(data, sequential_ids(200), Metric::Cosine);
  Matrix queries = random_matrix(rng, 33, 8);
  auto seq = index.search_batch(queries, 7, 1);
  auto par = index.search_batch(queries, 7, 4);
  CHECK(seq == par);
}

TEST_CASE("exhaustive agreement on a 1000x16 instance") {
  Rng rng(75);
  Matrix data = random_matrix(rng, 1000, 16);
  auto ids = sequential_ids(1000);
  for (Metric metric : {Metric::Dot, Metric::Cosine, Metric::Euclidean}) {
    FlatIndex index(data, ids, metric);
    Matrix qm = random_matrix(rng, 1, 16);
    auto got = index.search(qm.row(0), 1000);
    auto want = brute_force(data, ids, qm.row(0), metric, 1000);
    CHECK(got == want);
  }
}
