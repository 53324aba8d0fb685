#pragma once

#include <functional>
#include <vector>

#include "cef/rng.hpp"
#include "cef/tensor.hpp"

namespace cef {

// Reflections with norm below this are treated as the identity and their
// gradient is zeroed, so near-zero Householder vectors cannot blow up.
inline constexpr double kHouseholderEps = 1e-8;

// Default central-difference step; balances truncation against rounding
// at float64.
inline constexpr double kFdStep = 1e-5;

using VecFn = std::function<Vec(const Vec&)>;

// Central-difference Jacobian of f at u, entry (i,j) =
// (f_i(u + step e_j) - f_i(u - step e_j)) / (2 step).
// Throws NumericError if f produces non-finite values.
Mat fd_jacobian(const VecFn& f, const Vec& u, double step = kFdStep);

// Matrix exponential by scaling-and-squaring with a Taylor series of
// order 12; the input is halved until its 1-norm is below 0.5.
Mat expm(const Mat& a);

// Directional (Frechet) derivative of expm at m in direction e, via the
// block-triangular augmentation. The adjoint of d exp(A) applied to a
// cotangent G is expm_frechet(A^T, G).
Mat expm_frechet(const Mat& m, const Mat& e);

// ---------------------------------------------------------------------------
// Householder product Q = H_k ... H_1 with H_i = I - 2 w_i w_i^T / |w_i|^2.
// Applications run in O(k d) per vector without materializing Q.

struct HouseholderStack {
  int dim = 0;
  std::vector<Vec> vectors;  // applied in index order for Q x

  HouseholderStack() = default;
  HouseholderStack(int dim_, int count) : dim(dim_), vectors(count, Vec::Zero(dim_)) {}

  int count() const { return static_cast<int>(vectors.size()); }
  int param_count() const { return dim * count(); }
  void get_params(double* out) const;
  void set_params(const double* in);
  void init_random(Rng& rng);

  Mat apply(const Mat& x) const;            // Q X, columns are vectors
  Mat apply_transpose(const Mat& x) const;  // Q^T X
  Mat materialize() const;

  // Reverse-mode products for Y = Q X (resp. Y = Q^T X): writes the input
  // cotangent and accumulates parameter cotangents into cot_params.
  void vjp_apply(const Mat& x, const Mat& cot, Mat* cot_x, double* cot_params) const;
  void vjp_apply_transpose(const Mat& x, const Mat& cot, Mat* cot_x,
                           double* cot_params) const;
};

Vec householder_apply(const HouseholderStack& stack, const Vec& v);
Vec householder_apply_transpose(const HouseholderStack& stack, const Vec& v);

// ---------------------------------------------------------------------------
// Special orthogonal matrices Q = exp(A) with A skew-symmetric; d(d-1)/2
// free parameters, det Q = +1.

struct SkewOrthogonal {
  int dim = 0;
  Vec params;  // packed strict upper triangle of A, row-major

  SkewOrthogonal() = default;
  explicit SkewOrthogonal(int dim_)
      : dim(dim_), params(Vec::Zero(static_cast<Eigen::Index>(dim_) * (dim_ - 1) / 2)) {
    rebuild();
  }

  int param_count() const { return static_cast<int>(params.size()); }
  void get_params(double* out) const;
  void set_params(const double* in);
  void init_random(Rng& rng, double scale = 0.5);

  Mat skew_matrix() const;  // A = -A^T
  const Mat& matrix() const { return q_; }

  Mat apply(const Mat& x) const { return q_ * x; }
  Mat apply_transpose(const Mat& x) const { return q_.transpose() * x; }

  // Parameter cotangent given the cotangent of Q = exp(A).
  Vec params_cotangent(const Mat& cot_q) const;

  void rebuild();  // refresh cached exp(A); call after mutating params

 private:
  Mat q_;
};

Mat skew_expm(const SkewOrthogonal& s);

// ---------------------------------------------------------------------------
// Unified trainable orthogonal parameterization.

class OrthogonalParam {
 public:
  enum class Kind { householder, skew };

  OrthogonalParam() = default;
  OrthogonalParam(Kind kind, int dim, int householder_count = 0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  int householder_count() const { return hh_.count(); }

  int param_count() const;
  void get_params(double* out) const;
  void set_params(const double* in);
  void init_random(Rng& rng);

  Mat apply(const Mat& x) const;
  Mat apply_transpose(const Mat& x) const;
  Vec apply(const Vec& x) const { return apply(Mat(x)).col(0); }
  Vec apply_transpose(const Vec& x) const { return apply_transpose(Mat(x)).col(0); }
  Mat materialize() const;

  void vjp_apply(const Mat& x, const Mat& cot, Mat* cot_x, double* cot_params) const;
  void vjp_apply_transpose(const Mat& x, const Mat& cot, Mat* cot_x,
                           double* cot_params) const;

 private:
  Kind kind_ = Kind::skew;
  int dim_ = 0;
  HouseholderStack hh_;
  SkewOrthogonal skew_;
};

// ---------------------------------------------------------------------------
// Invertible matrices in a PLU decomposition: W = P L U with unit-lower L
// and U stored as log-magnitudes plus fixed signs on the diagonal, so
// log|det W| is a plain sum.

struct PluMatrix {
  int dim = 0;
  std::vector<int> perm;       // row i of W comes from row perm[i] of L U
  std::vector<int> diag_sign;  // fixed at factorization time
  Vec lower;                   // strict lower triangle of L, row-major
  Vec upper;                   // strict upper triangle of U, row-major
  Vec diag_log;                // log |U_ii|

  static PluMatrix identity(int d);
  static PluMatrix from_matrix(const Mat& w);
  // Random rotation via the exponential map; Glow-style init for 1x1
  // convolutions.
  static PluMatrix random_rotation(int d, Rng& rng);

  int param_count() const { return static_cast<int>(lower.size() + upper.size() + diag_log.size()); }
  void get_params(double* out) const;
  void set_params(const double* in);

  const Mat& matrix() const { return w_; }
  double logdet() const { return diag_log.sum(); }

  Mat apply(const Mat& z) const { return w_ * z; }
  // W^{-1} y by permutation and two triangular solves.
  Mat solve(const Mat& y) const;

  void vjp_apply(const Mat& z, const Mat& cot, Mat* cot_z, double* cot_params) const;
  void vjp_solve(const Mat& y, const Mat& cot, Mat* cot_y, double* cot_params) const;
  // d logdet / d diag_log = 1 elementwise.
  void vjp_logdet(double cot, double* cot_params) const;

  void rebuild();  // refresh cached L, U, W

 private:
  Mat l_, u_, w_;
  void add_matrix_cotangent(const Mat& cot_w, double* cot_params) const;
};

double plu_logdet(const PluMatrix& w);

}  // namespace cef
