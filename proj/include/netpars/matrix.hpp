#pragma once
// Minimal dense row-major matrix used for series, probabilities and bit masks.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace netpars {

template <typename T>
class Matrix {
 public:
  Matrix() = default;

  Matrix(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols) {
    check_dims(rows, cols);
    data_.assign(static_cast<std::size_t>(rows) * cols, fill);
  }

  Matrix(int rows, int cols, std::vector<T> row_major) : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    check_dims(rows, cols);
    if (data_.size() != static_cast<std::size_t>(rows) * cols)
      throw std::invalid_argument("Matrix: data size does not match dimensions");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<T> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const T> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  static void check_dims(int rows, int cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

// Encoder outputs in [0,1]^(m x t).
using ProbMatrix = Matrix<double>;
// Binary events in {0,1}^(m x t).
using EventMatrix = Matrix<std::uint8_t>;

}  // namespace netpars
