#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bsc/errors.hpp"
#include "bsc/matrix.hpp"
#include "bsc/rng.hpp"

using namespace bsc;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.next_real(-1.0, 1.0);
  return m;
}

// Independent oracle: entry-by-entry triple loop.
Matrix naive_matmul_transposed(const Matrix& q, const Matrix& a) {
  Matrix out(q.rows(), a.rows());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < a.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.cols(); ++k) s += q(i, k) * a(j, k);
      out(i, j) = s;
    }
  return out;
}

}  // namespace

TEST_CASE("matmul_transposed identity") {
  Matrix id = Matrix::from_rows({{1, 0}, {0, 1}});
  Matrix s = matmul_transposed(id, id);
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(0, 1) == doctest::Approx(0.0));
  CHECK(s(1, 0) == doctest::Approx(0.0));
  CHECK(s(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("matmul_transposed single dot product") {
  Matrix q = Matrix::from_rows({{1, 2}});
  Matrix a = Matrix::from_rows({{3, 4}});
  Matrix s = matmul_transposed(q, a);
  CHECK(s.rows() == 1);
  CHECK(s.cols() == 1);
  CHECK(s(0, 0) == doctest::Approx(11.0));
}

TEST_CASE("matmul_transposed matches the brute-force oracle") {
  Rng rng(42);
  Matrix q = random_matrix(rng, 5, 3);
  Matrix a = random_matrix(rng, 5, 3);
  Matrix got = matmul_transposed(q, a);
  Matrix want = naive_matmul_transposed(q, a);
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < a.rows(); ++j)
      CHECK(got(i, j) == doctest::Approx(want(i, j)).epsilon(1e-12));
}

TEST_CASE("matmul_transposed is symmetric in role") {
  Rng rng(7);
  Matrix q = random_matrix(rng, 10, 8);
  Matrix a = random_matrix(rng, 10, 8);
  Matrix qa = matmul_transposed(q, a);
  Matrix aq = matmul_transposed(a, q);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      CHECK(aq(i, j) == doctest::Approx(qa(j, i)).epsilon(1e-12));
}

TEST_CASE("matmul_transposed oracle agreement on 10x8 within 1e-12 relative") {
  Rng rng(13);
  Matrix q = random_matrix(rng, 10, 8);
  Matrix a = random_matrix(rng, 10, 8);
  Matrix got = matmul_transposed(q, a);
  Matrix want = naive_matmul_transposed(q, a);
  for (std::size_t k = 0; k < got.size(); ++k) {
    double denom = std::max(1.0, std::abs(want.data()[k]));
    CHECK(std::abs(got.data()[k] - want.data()[k]) / denom <= 1e-12);
  }
}

TEST_CASE("matmul_transposed rejects mismatched shapes") {
  Matrix q(2, 3), a(2, 4);
  CHECK_THROWS_AS(matmul_transposed(q, a), ShapeError);
  Matrix b(3, 3);
  CHECK_THROWS_AS(matmul_transposed(q, b), ShapeError);
  CHECK_NOTHROW(cross_similarity(q, b));  // row counts may differ here
}

TEST_CASE("row_softmax uniform case") {
  Matrix s = Matrix::from_rows({{0, 0}, {0, 0}});
  Matrix p = row_softmax(s);
  for (std::size_t k = 0; k < p.size(); ++k)
    CHECK(p.data()[k] == doctest::Approx(0.5));
}

TEST_CASE("row_softmax of the 2x2 identity") {
  Matrix p = row_softmax(Matrix::from_rows({{1, 0}, {0, 1}}));
  double want = std::exp(1.0) / (std::exp(1.0) + 1.0);  // 0.731059 by direct evaluation
  CHECK(p(0, 0) == doctest::Approx(want).epsilon(1e-9));
  CHECK(p(1, 1) == doctest::Approx(want).epsilon(1e-9));
  CHECK(want == doctest::Approx(0.731059).epsilon(1e-6));
}

TEST_CASE("row_softmax survives a +1000 outlier") {
  Matrix p = row_softmax(Matrix::from_rows({{1000.0, 0.0, -3.0}}));
  CHECK(all_finite(p));
  CHECK(p(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("row softmax rows sum to 1 after a similarity product") {
  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix q = random_matrix(rng, 6, 4);
    Matrix a = random_matrix(rng, 6, 4);
    Matrix p = row_softmax(matmul_transposed(q, a));
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < p.cols(); ++j) sum += p(i, j);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("log_sum_exp basics") {
  std::vector<double> one = {0.0};
  CHECK(log_sum_exp(one) == doctest::Approx(0.0));
  std::vector<double> two = {0.0, 0.0};
  CHECK(log_sum_exp(two) == doctest::Approx(std::log(2.0)));
  std::vector<double> big = {1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  std::vector<double> empty;
  CHECK_THROWS_AS(log_sum_exp(empty), DomainError);
}

TEST_CASE("log_sum_exp shift invariance") {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = 1 + rng.next_below(8);
    std::vector<double> xs(n);
    for (double& x : xs) x = rng.next_real(-5.0, 5.0);
    double c = rng.next_real(-100.0, 100.0);
    std::vector<double> shifted = xs;
    for (double& x : shifted) x += c;
    CHECK(std::abs(log_sum_exp(shifted) - (log_sum_exp(xs) + c)) <= 1e-10);
  }
}

TEST_CASE("log_sum_exp is monotone in every coordinate") {
  std::vector<double> xs = {0.3, -1.2, 2.0};
  double base = log_sum_exp(xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto bumped = xs;
    bumped[i] += 0.5;
    CHECK(log_sum_exp(bumped) > base);
  }
}

TEST_CASE("row_log_softmax does not underflow on extreme gaps") {
  Matrix s = Matrix::from_rows({{0.0, 800.0}});
  Matrix ls = row_log_softmax(s);
  CHECK(all_finite(ls));
  CHECK(ls(0, 1) == doctest::Approx(0.0));
  CHECK(ls(0, 0) == doctest::Approx(-800.0));
}
