#include "mmsur/array.hpp"

#include <algorithm>
#include <cmath>

namespace mmsur::nd {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}
}  // namespace

Array::Array(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size())
    throw DimensionError("array data does not match shape");
  if (shape_.size() > 2) throw DimensionError("rank > 2 not supported");
  cols_ = shape_.size() == 2 ? shape_[1] : 1;
}

Array Array::scalar(double v) { return Array({}, {v}); }

Array Array::zeros(std::vector<std::size_t> shape) {
  std::vector<double> data(product(shape), 0.0);
  return Array(std::move(shape), std::move(data));
}

Array Array::filled(std::vector<std::size_t> shape, double v) {
  std::vector<double> data(product(shape), v);
  return Array(std::move(shape), std::move(data));
}

Array Array::vec(std::vector<double> values) {
  std::size_t n = values.size();
  return Array({n}, std::move(values));
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Array({rows, cols}, std::move(values));
}

Array Array::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix initializer");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Array({r, c}, std::move(data));
}

Array Array::identity(std::size_t n) {
  Array a = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  return a;
}

Array Array::from_eigen(const Eigen::Ref<const EigenRowMat>& m) {
  Array a = zeros({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  a.mat() = m;
  return a;
}

Array Array::col_from_eigen(const Eigen::VectorXd& v) {
  Array a = zeros({static_cast<std::size_t>(v.size())});
  a.flat() = v;
  return a;
}

std::size_t Array::rows() const {
  if (rank() != 2) throw DimensionError("rows() requires rank 2");
  return shape_[0];
}

std::size_t Array::cols() const {
  if (rank() != 2) throw DimensionError("cols() requires rank 2");
  return shape_[1];
}

std::size_t Array::dim() const {
  if (rank() != 1) throw DimensionError("dim() requires rank 1");
  return shape_[0];
}

double Array::as_scalar() const {
  if (size() != 1) throw DimensionError("as_scalar() requires a single element");
  return data_[0];
}

bool Array::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Array::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Eigen::Map<EigenRowMat> Array::mat() {
  if (rank() != 2) throw DimensionError("mat() requires rank 2");
  return {data_.data(), static_cast<Eigen::Index>(shape_[0]),
          static_cast<Eigen::Index>(shape_[1])};
}

Eigen::Map<const EigenRowMat> Array::mat() const {
  if (rank() != 2) throw DimensionError("mat() requires rank 2");
  return {data_.data(), static_cast<Eigen::Index>(shape_[0]),
          static_cast<Eigen::Index>(shape_[1])};
}

Eigen::Map<Eigen::VectorXd> Array::flat() {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::Map<const Eigen::VectorXd> Array::flat() const {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Array Array::reshaped(std::vector<std::size_t> shape) const {
  if (product(shape) != size()) throw DimensionError("reshape changes element count");
  return Array(std::move(shape), data_);
}

Array Array::transposed() const {
  if (rank() != 2) throw DimensionError("transposed() requires rank 2");
  Array out = zeros({cols(), rows()});
  out.mat() = mat().transpose();
  return out;
}

bool approx_equal(const Array& a, const Array& b, double tol) {
  return a.same_shape(b) && max_abs_diff(a, b) <= tol;
}

double max_abs_diff(const Array& a, const Array& b) {
  if (a.size() != b.size()) throw DimensionError("size mismatch in max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mmsur::nd
