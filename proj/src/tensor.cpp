#include "helu/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace helu {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, "x")); }

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError(
        fmt::format("tensor shape {} needs {} elements, got {}", shape_str(shape_), shape_size(shape_), data_.size()));
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError(fmt::format("axis {} out of range for shape {}", axis, shape_str(shape_)));
  }
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError(fmt::format("expected a matrix, got shape {}", shape_str(shape_)));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError(fmt::format("expected a matrix, got shape {}", shape_str(shape_)));
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw DimensionError(fmt::format("item() on non-scalar shape {}", shape_str(shape_)));
  return data_[0];
}

Tensor Tensor::reshape(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw DimensionError(fmt::format("cannot reshape {} to {}", shape_str(shape_), shape_str(shape)));
  }
  return Tensor(std::move(shape), data_);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

bool all_finite(const Tensor& t) {
  for (double v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<std::size_t> nonfinite_indices(const Tensor& t) {
  std::vector<std::size_t> bad;
  auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) bad.push_back(i);
  return bad;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(fmt::format("{}: shape mismatch {} vs {}", op, shape_str(a.shape()), shape_str(b.shape())));
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError(fmt::format("matmul: incompatible shapes {} and {}", shape_str(a.shape()), shape_str(b.shape())));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor transpose(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor reduce_sum(const Tensor& t, std::size_t axis) {
  const auto& shape = t.shape();
  const std::size_t extent = t.dim(axis);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];

  Shape out_shape;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != axis) out_shape.push_back(shape[i]);
  Tensor out(out_shape);
  auto src = t.values();
  auto dst = out.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t e = 0; e < extent; ++e)
      for (std::size_t i = 0; i < inner; ++i) dst[o * inner + i] += src[(o * extent + e) * inner + i];
  return out;
}

Tensor reduce_mean(const Tensor& t, std::size_t axis) {
  const double n = static_cast<double>(t.dim(axis));
  Tensor out = reduce_sum(t, axis);
  for (double& v : out.values()) v /= n;
  return out;
}

double sum_all(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  return acc;
}

Tensor add_row_vector(const Tensor& m, const Tensor& v) {
  if (v.rank() != 1 || v.size() != m.cols()) {
    throw DimensionError(
        fmt::format("add_row_vector: shapes {} and {} do not broadcast", shape_str(m.shape()), shape_str(v.shape())));
  }
  Tensor out = m;
  const std::size_t c = m.cols();
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += v[j];
  return out;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  return ewise_zip(a, b, [](double x, double y) { return x + y; });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  return ewise_zip(a, b, [](double x, double y) { return x - y; });
}

Tensor operator*(double s, const Tensor& t) {
  return ewise_map(t, [s](double x) { return s * x; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  return ewise_zip(a, b, [](double x, double y) { return x * y; });
}

Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) throw DimensionError("slice_rows: range out of bounds");
  const std::size_t c = m.cols();
  auto src = m.values();
  return Tensor(Shape{end - begin, c}, std::vector<double>(src.begin() + begin * c, src.begin() + end * c));
}

Tensor gather_rows(const Tensor& m, std::span<const std::size_t> index) {
  const std::size_t c = m.cols();
  Tensor out(Shape{index.size(), c});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= m.rows()) throw DimensionError("gather_rows: index out of bounds");
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = m.at(index[i], j);
  }
  return out;
}

}  // namespace helu
