#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "llm3dti/memory.hpp"

namespace llm3dti {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  using Storage = std::vector<double, TrackedAllocator<double>>;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::span<const double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> values);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double v);
  bool all_finite() const noexcept;
  std::string shape_string() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Storage data_;
};

// --- products -------------------------------------------------------------

Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// --- elementwise ----------------------------------------------------------

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);
// In place a += s·b.
void axpy(Matrix& a, double s, const Matrix& b);
// Adds the 1×cols row vector to every row.
Matrix add_row_broadcast(const Matrix& m, const Matrix& row);
Matrix column_sums(const Matrix& m);

Matrix sigmoid(const Matrix& m);
double sigmoid(double x);
Matrix relu(const Matrix& m);
// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& m);

// --- structural -----------------------------------------------------------

Matrix hstack(const std::vector<const Matrix*>& blocks);
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);
Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end);
Matrix symmetrize(const Matrix& s);

double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

// --- eigendecomposition ---------------------------------------------------

struct EigenPairs {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
};

struct JacobiOptions {
  int max_sweeps = 100;
  double off_diagonal_tol = 1e-10;  // relative to ‖S‖_F
  double residual_tol = 1e-6;       // ‖Sv − λv‖₂ relative to ‖S‖_F
};

// Full symmetric eigendecomposition by cyclic Jacobi rotations. Input must be
// symmetric within 1e-8 (callers symmetrize first). Eigenvectors carry their
// largest-magnitude component positive.
EigenPairs eigh(const Matrix& s, const JacobiOptions& opts = {});

// Top-k eigenpairs by algebraic value, descending.
EigenPairs eigh_topk(const Matrix& s, std::size_t k, const JacobiOptions& opts = {});

}  // namespace llm3dti
