#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "cef/errors.hpp"

namespace cef {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense float64 array with a row-major flat buffer. Vectors are shape {d},
// datasets are {count, d}, image activations are {c, h, w}.
struct Tensor {
  std::vector<std::int64_t> shape;
  Vec data;

  Tensor() = default;
  Tensor(std::vector<std::int64_t> shape_, Vec data_);

  static Tensor zeros(const std::vector<std::int64_t>& shape);
  static Tensor from_vec(const Vec& v);

  std::int64_t size() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }

  // For {count, d} tensors: row i as a vector.
  Vec row(std::int64_t i) const;
  void set_row(std::int64_t i, const Vec& v);
  std::int64_t rows() const;
  std::int64_t row_size() const;

  // Throws ShapeError if shape and buffer disagree, NumericError if any
  // entry is non-finite.
  void validate() const;
};

std::int64_t shape_product(const std::vector<std::int64_t>& shape);
bool all_finite(const Vec& v);
void require_finite(const Vec& v, const char* what);

}  // namespace cef
