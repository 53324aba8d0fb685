#pragma once

#include <json.hpp>
#include <memory>
#include <string>

#include "cef/linalg.hpp"
#include "cef/tensor.hpp"

namespace cef {

// Evaluation inside these guards raises SingularityError instead of
// clamping, so densities are never silently wrong.
inline constexpr double kInversionEps = 1e-12;
inline constexpr double kSctEps = 1e-12;

struct BlockVjp {
  Vec input;
  Vec params;
};

// A conformal (or piecewise conformal) building block g_i mapping
// R^{in_dim} into R^{out_dim} with out_dim >= in_dim. Each block exposes
// the forward map, a left-inverse defined on (a neighborhood of) its
// range, the log conformal factor log|lambda(u)|, and exact reverse-mode
// products for all three.
//
// Blocks are immutable during evaluation: all const methods are pure and
// safe to call concurrently. Parameter updates must be externally
// synchronized.
class ConformalBlock {
 public:
  virtual ~ConformalBlock() = default;

  virtual std::string type() const = 0;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;

  virtual int param_count() const { return 0; }
  virtual void get_params(double* out) const {}
  virtual void set_params(const double* in) {}

  virtual Vec forward(const Vec& u) const = 0;
  virtual Vec left_inverse(const Vec& v) const = 0;
  virtual double log_conformal_factor(const Vec& u) const { return 0.0; }

  // Parameter cotangents accumulate into cot_params (length param_count());
  // the input cotangent is overwritten.
  virtual void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                           double* cot_params) const = 0;
  virtual void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                double* cot_params) const = 0;
  virtual void vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                                 double* cot_params) const {
    *cot_u = Vec::Zero(in_dim());
  }

  // Structural descriptor (type, dims, parameterization); used by configs
  // and checkpoints. Trainable values are not part of the descriptor.
  virtual nlohmann::json spec() const = 0;

  void check_in(const Vec& u) const;
  void check_out(const Vec& v) const;
};

double block_log_conformal_factor(const ConformalBlock& block, const Vec& u);
BlockVjp block_vjp_forward(const ConformalBlock& block, const Vec& u, const Vec& cot_out);
BlockVjp block_vjp_left_inverse(const ConformalBlock& block, const Vec& v, const Vec& cot_u);
BlockVjp block_vjp_log_conformal(const ConformalBlock& block, const Vec& u, double cot);

// --- Conformal mappings (dimension preserving) ------------------------------

// u -> u + a; lambda = 1.
class TranslationBlock final : public ConformalBlock {
 public:
  explicit TranslationBlock(int dim) : offset_(Vec::Zero(dim)) {}
  explicit TranslationBlock(Vec offset) : offset_(std::move(offset)) {}

  std::string type() const override { return "translation"; }
  int in_dim() const override { return static_cast<int>(offset_.size()); }
  int out_dim() const override { return in_dim(); }
  int param_count() const override { return in_dim(); }
  void get_params(double* out) const override;
  void set_params(const double* in) override;

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  nlohmann::json spec() const override;

  const Vec& offset() const { return offset_; }

 private:
  Vec offset_;
};

// u -> Q u with Q in O(d); lambda = 1.
class OrthogonalBlock final : public ConformalBlock {
 public:
  explicit OrthogonalBlock(OrthogonalParam q) : q_(std::move(q)) {}

  std::string type() const override { return "orthogonal"; }
  int in_dim() const override { return q_.dim(); }
  int out_dim() const override { return q_.dim(); }
  int param_count() const override { return q_.param_count(); }
  void get_params(double* out) const override { q_.get_params(out); }
  void set_params(const double* in) override { q_.set_params(in); }

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  nlohmann::json spec() const override;

  const OrthogonalParam& param() const { return q_; }
  OrthogonalParam& param() { return q_; }

 private:
  OrthogonalParam q_;
};

// u -> e^{log_s} u. The scale is stored as a log-magnitude, so the
// trainable layer covers positive scalings only; negative scalings are
// representable by composing with a reflection. lambda = e^{log_s}.
class ScalingBlock final : public ConformalBlock {
 public:
  explicit ScalingBlock(int dim, double log_scale = 0.0)
      : dim_(dim), log_scale_(log_scale) {}

  std::string type() const override { return "scaling"; }
  int in_dim() const override { return dim_; }
  int out_dim() const override { return dim_; }
  int param_count() const override { return 1; }
  void get_params(double* out) const override { *out = log_scale_; }
  void set_params(const double* in) override { log_scale_ = *in; }

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  double log_conformal_factor(const Vec& u) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  void vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                         double* cot_params) const override;
  nlohmann::json spec() const override;

  double log_scale() const { return log_scale_; }

 private:
  int dim_;
  double log_scale_;
};

// u -> u / |u|^2; self-inverse; lambda = |u|^{-2}. Numerically unstable
// under training, so it is kept out of the default trainable catalog and
// only enters architectures behind an explicit config flag.
class InversionBlock final : public ConformalBlock {
 public:
  explicit InversionBlock(int dim) : dim_(dim) {}

  std::string type() const override { return "inversion"; }
  int in_dim() const override { return dim_; }
  int out_dim() const override { return dim_; }

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  double log_conformal_factor(const Vec& u) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  void vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                         double* cot_params) const override;
  nlohmann::json spec() const override;

 private:
  int dim_;
};

// Special conformal transformation
//   u -> (u - |u|^2 b) / (1 - 2 b.u + |b|^2 |u|^2),
// an inversion, a translation by -b, and another inversion. Contains the
// identity at b = 0 and, unlike the raw inversion, trains stably.
// lambda = 1 / (1 - 2 b.u + |b|^2 |u|^2).
class SctBlock final : public ConformalBlock {
 public:
  explicit SctBlock(int dim) : b_(Vec::Zero(dim)) {}
  explicit SctBlock(Vec b) : b_(std::move(b)) {}

  std::string type() const override { return "sct"; }
  int in_dim() const override { return static_cast<int>(b_.size()); }
  int out_dim() const override { return in_dim(); }
  int param_count() const override { return in_dim(); }
  void get_params(double* out) const override;
  void set_params(const double* in) override;

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  double log_conformal_factor(const Vec& u) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  void vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                         double* cot_params) const override;
  nlohmann::json spec() const override;

  const Vec& coeff() const { return b_; }

  double denominator(const Vec& u) const;

 private:
  Vec b_;
};

// Appends out_dim - in_dim zeros at the tail of the flattened vector
// (channel-tail for image tensors); the left-inverse drops them.
// Trivially conformal with lambda = 1.
class PadBlock final : public ConformalBlock {
 public:
  PadBlock(int in_dim, int out_dim);

  std::string type() const override { return "pad"; }
  int in_dim() const override { return in_; }
  int out_dim() const override { return out_; }

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  nlohmann::json spec() const override;

 private:
  int in_, out_;
};

// --- Piecewise conformal embeddings -----------------------------------------

// u -> [ReLU(Qu); ReLU(-Qu)], conformal wherever no coordinate of Qu is
// zero; lambda = 1. The left-inverse Q^T(v1 - v2) is applied to arbitrary
// inputs without validating v1 .* v2 = 0: reconstruction training needs
// projection semantics off the range.
class ConformalReluBlock final : public ConformalBlock {
 public:
  explicit ConformalReluBlock(OrthogonalParam q) : q_(std::move(q)) {}

  std::string type() const override { return "conformal_relu"; }
  int in_dim() const override { return q_.dim(); }
  int out_dim() const override { return 2 * q_.dim(); }
  int param_count() const override { return q_.param_count(); }
  void get_params(double* out) const override { q_.get_params(out); }
  void set_params(const double* in) override { q_.set_params(in); }

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  nlohmann::json spec() const override;

  const OrthogonalParam& param() const { return q_; }

 private:
  OrthogonalParam q_;
};

// Applies Q1 where the channel vector has norm < 1 and Q2 where the norm
// is >= 1 (the boundary takes the Q2 branch). Orthogonal maps preserve
// norms, so the inverse applies the same test to the output. lambda = 1.
// With spatial > 1 the test and transform act per spatial position on the
// channel vector, giving the 1x1 conditional-orthogonal convolution.
class ConditionalOrthogonalBlock final : public ConformalBlock {
 public:
  ConditionalOrthogonalBlock(int spatial, OrthogonalParam q1, OrthogonalParam q2);

  std::string type() const override { return "conditional_orthogonal"; }
  int in_dim() const override { return channels_ * spatial_; }
  int out_dim() const override { return in_dim(); }
  int param_count() const override { return q1_.param_count() + q2_.param_count(); }
  void get_params(double* out) const override;
  void set_params(const double* in) override;

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  nlohmann::json spec() const override;

  int spatial() const { return spatial_; }
  const OrthogonalParam& q1() const { return q1_; }
  const OrthogonalParam& q2() const { return q2_; }

 private:
  int channels_, spatial_;
  OrthogonalParam q1_, q2_;

  Mat gather(const Vec& x) const;           // channels x spatial
  Vec scatter(const Mat& cols) const;
};

// k x k convolution with stride k whose flattened filter matrix is
// orthogonal. The Jacobian is block diagonal with orthogonal blocks, so
// lambda = 1, and the inverse is the transposed convolution with the same
// filter. Input (c, h, w) -> output (k^2 c, h/k, w/k).
class OrthoConvBlock final : public ConformalBlock {
 public:
  OrthoConvBlock(int channels, int height, int width, int k, OrthogonalParam q);

  std::string type() const override { return "ortho_conv"; }
  int in_dim() const override { return channels_ * height_ * width_; }
  int out_dim() const override { return in_dim(); }
  int param_count() const override { return q_.param_count(); }
  void get_params(double* out) const override { q_.get_params(out); }
  void set_params(const double* in) override { q_.set_params(in); }

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  nlohmann::json spec() const override;

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int kernel() const { return k_; }
  const OrthogonalParam& param() const { return q_; }

 private:
  int channels_, height_, width_, k_;
  OrthogonalParam q_;

  Mat to_patches(const Vec& x) const;       // (k^2 c) x n_patches
  Vec from_patches(const Mat& p) const;     // flatten as (k^2 c, h/k, w/k)
  Mat out_to_patches(const Vec& y) const;
  Vec patches_to_in(const Mat& p) const;
};

// Fixed embedding of the plane onto the radius-r sphere (minus its north
// pole):
//   z -> ( 2 r^2 z1 / D, 2 r^2 z2 / D, r (|z|^2 - r^2) / D ),  D = |z|^2 + r^2
// with conformal factor lambda(z) = 2 r^2 / D. Not trainable; serves as an
// analytic reference embedding.
class StereographicBlock final : public ConformalBlock {
 public:
  explicit StereographicBlock(double radius);

  std::string type() const override { return "stereographic"; }
  int in_dim() const override { return 2; }
  int out_dim() const override { return 3; }

  Vec forward(const Vec& u) const override;
  Vec left_inverse(const Vec& v) const override;
  double log_conformal_factor(const Vec& u) const override;
  void vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                   double* cot_params) const override;
  void vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                        double* cot_params) const override;
  void vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                         double* cot_params) const override;
  nlohmann::json spec() const override;

  double radius() const { return r_; }

 private:
  double r_;
};

// Convenience wrappers matching the layer catalog.
Vec translation_fwd(const Vec& u, const Vec& a);
Vec translation_inv(const Vec& v, const Vec& a);
Vec scaling_fwd(const Vec& u, double log_s);
Vec scaling_inv(const Vec& v, double log_s);
Vec inversion_fwd(const Vec& u);
Vec sct_fwd(const Vec& u, const Vec& b);
Vec sct_inv(const Vec& v, const Vec& b);
Vec pad_zeros_fwd(const Vec& u, int n);

}  // namespace cef
