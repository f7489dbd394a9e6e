#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rul {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles. Vectors are 1xN rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  std::string shape_string() const;

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose of a.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

/// Accumulating variants: out += a * b, out += a^T * b.
void matmul_add(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_at_b_add(const Matrix& a, const Matrix& b, Matrix& out);

/// Adds a 1xC row vector to every row of m.
void add_row_broadcast(Matrix& m, const Matrix& row);
/// Column sums as a 1xC row, accumulated into out.
void column_sums_add(const Matrix& m, Matrix& out);

Matrix hadamard(const Matrix& a, const Matrix& b);

enum class Activation { sigmoid, tanh, relu };

double sigmoid(double x);
double apply(Activation f, double x);
Matrix elementwise(Activation f, const Matrix& m);

}  // namespace rul
