#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "mmsur/errors.hpp"

namespace mmsur::nd {

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major array of doubles, rank 0..2. Values are owned; shape is
// immutable after construction.
class Array {
 public:
  Array() : shape_(), data_(1, 0.0) {}  // rank-0 zero

  static Array scalar(double v);
  static Array zeros(std::vector<std::size_t> shape);
  static Array filled(std::vector<std::size_t> shape, double v);
  static Array vec(std::vector<double> values);
  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Array matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Array identity(std::size_t n);
  static Array from_eigen(const Eigen::Ref<const EigenRowMat>& m);
  static Array col_from_eigen(const Eigen::VectorXd& v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Array& other) const { return shape_ == other.shape_; }

  std::size_t rows() const;  // rank 2 only
  std::size_t cols() const;  // rank 2 only
  std::size_t dim() const;   // rank 1 only

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  double as_scalar() const;
  bool all_finite() const;
  double max_abs() const;

  // Eigen views. mat() requires rank 2; any-rank views treat the data as a
  // single row (flat_row) or column (flat_col).
  Eigen::Map<EigenRowMat> mat();
  Eigen::Map<const EigenRowMat> mat() const;
  Eigen::Map<Eigen::VectorXd> flat();
  Eigen::Map<const Eigen::VectorXd> flat() const;

  Array reshaped(std::vector<std::size_t> shape) const;
  Array transposed() const;  // rank 2

 private:
  Array(std::vector<std::size_t> shape, std::vector<double> data);
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::size_t cols_ = 1;  // cached for operator() on rank 2
};

bool approx_equal(const Array& a, const Array& b, double tol);
double max_abs_diff(const Array& a, const Array& b);

}  // namespace mmsur::nd
