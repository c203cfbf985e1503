#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace bsc {

// Dense row-major matrix of doubles. Rows are embeddings throughout the
// library; gradients are expressed against this layout, so the storage
// contract matters: entry (r, c) lives at data()[r * cols() + c].
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

// result[i][j] = dot(q_i, a_j) for q, a with matching embedding dimension.
// No constraint on the row counts; used for query-vs-candidate scoring.
Matrix cross_similarity(const Matrix& q, const Matrix& a);

// Square batch similarity matrix Q A^T. Requires equal row counts as well,
// since the diagonal pairs (q_i, a_i) are meaningful.
Matrix matmul_transposed(const Matrix& q, const Matrix& a);

// Row-wise softmax with max-subtraction; every output row sums to 1.
Matrix row_softmax(const Matrix& s);

// Row-wise log-softmax, stable even when probabilities underflow.
Matrix row_log_softmax(const Matrix& s);

// log(sum(exp(x))) with max-subtraction. Empty input is a domain error.
double log_sum_exp(std::span<const double> xs);

Matrix transpose(const Matrix& m);

bool all_finite(const Matrix& m);
void require_finite(const Matrix& m, const char* what);

// m += factor * other (shapes must match).
void add_scaled(Matrix& m, const Matrix& other, double factor = 1.0);
Matrix scaled(const Matrix& m, double factor);

}  // namespace bsc
