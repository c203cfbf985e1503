#include "bsc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsc/errors.hpp"

namespace bsc {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() == 0 ? 0 : rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != m.cols()) throw ShapeError("from_rows: ragged row lengths");
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

Matrix cross_similarity(const Matrix& q, const Matrix& a) {
  if (q.cols() != a.cols())
    throw ShapeError("cross_similarity: embedding dimensions differ (" +
                     std::to_string(q.cols()) + " vs " + std::to_string(a.cols()) + ")");
  Matrix out(q.rows(), a.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto qi = q.row(i);
    for (std::size_t j = 0; j < a.rows(); ++j) {
      out(i, j) = dot(qi, a.row(j));
    }
  }
  return out;
}

Matrix matmul_transposed(const Matrix& q, const Matrix& a) {
  if (q.rows() != a.rows())
    throw ShapeError("matmul_transposed: batch sizes differ (" +
                     std::to_string(q.rows()) + " vs " + std::to_string(a.rows()) + ")");
  return cross_similarity(q, a);
}

Matrix row_softmax(const Matrix& s) {
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto row = s.row(i);
    double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) {
      out(i, j) = std::exp(row[j] - mx);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < s.cols(); ++j) out(i, j) /= sum;
  }
  return out;
}

Matrix row_log_softmax(const Matrix& s) {
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double lse = log_sum_exp(s.row(i));
    for (std::size_t j = 0; j < s.cols(); ++j) out(i, j) = s(i, j) - lse;
  }
  return out;
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("log_sum_exp: empty input");
  double mx = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

bool all_finite(const Matrix& m) {
  for (double v : m.data())
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) throw DomainError(std::string(what) + ": non-finite entries");
}

void add_scaled(Matrix& m, const Matrix& other, double factor) {
  if (!m.same_shape(other)) throw ShapeError("add_scaled: shape mismatch");
  for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] += factor * other.data()[k];
}

Matrix scaled(const Matrix& m, double factor) {
  Matrix out = m;
  for (double& v : out.data()) v *= factor;
  return out;
}

}  // namespace bsc
