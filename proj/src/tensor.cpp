#include "cef/tensor.hpp"

#include <cmath>
#include <utility>

namespace cef {

Tensor::Tensor(std::vector<std::int64_t> shape_, Vec data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("tensor shape does not match buffer size");
  }
}

Tensor Tensor::zeros(const std::vector<std::int64_t>& shape) {
  return Tensor(shape, Vec::Zero(shape_product(shape)));
}

Tensor Tensor::from_vec(const Vec& v) {
  return Tensor({v.size()}, v);
}

Vec Tensor::row(std::int64_t i) const {
  return data.segment(i * row_size(), row_size());
}

void Tensor::set_row(std::int64_t i, const Vec& v) {
  if (v.size() != row_size()) throw ShapeError("row size mismatch");
  data.segment(i * row_size(), row_size()) = v;
}

std::int64_t Tensor::rows() const {
  if (ndim() < 1) throw ShapeError("tensor has no dimensions");
  return shape[0];
}

std::int64_t Tensor::row_size() const {
  return rows() == 0 ? 0 : size() / rows();
}

void Tensor::validate() const {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("tensor shape does not match buffer size");
  }
  require_finite(data, "tensor");
}

std::int64_t shape_product(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto s : shape) {
    if (s <= 0) throw ShapeError("tensor extents must be positive");
    n *= s;
  }
  return n;
}

bool all_finite(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

void require_finite(const Vec& v, const char* what) {
  if (!all_finite(v)) {
    throw NumericError(std::string(what) + ": non-finite value");
  }
}

}  // namespace cef
