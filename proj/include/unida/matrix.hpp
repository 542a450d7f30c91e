#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace unida {

// Dense row-major 2D array of doubles. Carries features, weights and
// gradients throughout the project. 64-bit floats everywhere; the scales
// are small and reproducibility matters more than speed.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }
  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  std::vector<double> row(std::size_t r) const;
  void set_row(std::size_t r, const std::vector<double>& v);

  Matrix transposed() const;

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  // Throws std::runtime_error naming `what` if any entry is NaN/Inf.
  void require_finite(const std::string& what) const;

  void add_inplace(const Matrix& o);
  void sub_inplace(const Matrix& o);
  void scale_inplace(double s);
  void fill(double v) { for (auto& x : data_) x = v; }

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a(n,k) * b(k,m) -> (n,m)
Matrix matmul(const Matrix& a, const Matrix& b);
// a(k,n)^T * b(k,m) -> (n,m)
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a(n,k) * b(m,k)^T -> (n,m)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);

std::vector<double> colsum(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Error with a shape diagnostic, e.g. "matmul: (3x2)*(4x1)".
[[noreturn]] void throw_shape_error(const std::string& op, const Matrix& a, const Matrix& b);

}  // namespace unida
