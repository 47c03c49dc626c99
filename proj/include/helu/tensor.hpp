#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "helu/errors.hpp"

namespace helu {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles.
///
/// A tensor owns its buffer; copies are deep. Rank-0 tensors are scalars with
/// one element. There are no strides or views: reshape copies.
class Tensor {
 public:
  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  /// Matrix accessors; require rank 2.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double item() const;

  Tensor reshape(Shape shape) const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// True when shapes match and every element has the same bit pattern.
bool bitwise_equal(const Tensor& a, const Tensor& b);

bool all_finite(const Tensor& t);
std::vector<std::size_t> nonfinite_indices(const Tensor& t);

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

template <typename F>
Tensor ewise_map(const Tensor& t, F&& f) {
  Tensor out(t.shape());
  auto src = t.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Tensor ewise_zip(const Tensor& a, const Tensor& b, F&& f) {
  require_same_shape(a, b, "ewise_zip");
  Tensor out(a.shape());
  auto x = a.values();
  auto y = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

/// Matrix product, summing left to right over the inner dimension.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& m);

Tensor reduce_sum(const Tensor& t, std::size_t axis);
Tensor reduce_mean(const Tensor& t, std::size_t axis);
double sum_all(const Tensor& t);

/// m[r, :] + v for every row; the only broadcast supported.
Tensor add_row_vector(const Tensor& m, const Tensor& v);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& t);
Tensor hadamard(const Tensor& a, const Tensor& b);

/// Rows [begin, end) of a matrix, or the rows listed in `index`.
Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& m, std::span<const std::size_t> index);

}  // namespace helu
