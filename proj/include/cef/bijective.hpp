#pragma once

#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "cef/linalg.hpp"
#include "cef/tensor.hpp"

namespace cef {

// Dimension-preserving flow layer with exact inverse and log|det J|.
// forward runs in the sampling direction z -> u; inverse in the inference
// direction u -> z. forward_logdet is always evaluated at the z-side
// point, which is the quantity the likelihood needs.
//
// Same evaluation contract as ConformalBlock: const methods are pure,
// parameter updates are externally synchronized.
class BijectiveBlock {
 public:
  virtual ~BijectiveBlock() = default;

  virtual std::string type() const = 0;
  virtual int dim() const = 0;

  virtual int param_count() const = 0;
  virtual void get_params(double* out) const = 0;
  virtual void set_params(const double* in) = 0;

  virtual Vec forward(const Vec& z) const = 0;
  virtual Vec inverse(const Vec& u) const = 0;
  virtual double forward_logdet(const Vec& z) const = 0;

  // Reverse-mode products for (forward(z), forward_logdet(z)); parameter
  // cotangents accumulate into cot_params.
  virtual void vjp_forward(const Vec& z, const Vec& cot_out, double cot_logdet,
                           Vec* cot_z, double* cot_params) const = 0;
  // Reverse-mode products for (inverse(u), forward_logdet(inverse(u))).
  virtual void vjp_inverse(const Vec& u, const Vec& cot_z, double cot_logdet,
                           Vec* cot_u, double* cot_params) const = 0;

  virtual nlohmann::json spec() const = 0;

  void check_dim(const Vec& v) const;
};

// Per-channel affine map u = z * exp(log_scale) + bias with data-dependent
// initialization: the first training batch is mapped (in the inference
// direction) to zero mean and unit variance per channel.
class ActNormBlock final : public BijectiveBlock {
 public:
  ActNormBlock(int channels, int spatial = 1, bool initialized = false);

  std::string type() const override { return "actnorm"; }
  int dim() const override { return channels_ * spatial_; }
  int param_count() const override { return 2 * channels_; }
  void get_params(double* out) const override;
  void set_params(const double* in) override;

  Vec forward(const Vec& z) const override;
  Vec inverse(const Vec& u) const override;
  double forward_logdet(const Vec& z) const override;
  void vjp_forward(const Vec& z, const Vec& cot_out, double cot_logdet, Vec* cot_z,
                   double* cot_params) const override;
  void vjp_inverse(const Vec& u, const Vec& cot_z, double cot_logdet, Vec* cot_u,
                   double* cot_params) const override;
  nlohmann::json spec() const override;

  bool initialized() const { return initialized_; }
  int channels() const { return channels_; }
  int spatial() const { return spatial_; }
  // Sets bias/log-scale from per-channel moments of the batch (u-side
  // points) and marks the block initialized.
  void initialize_from(const std::vector<Vec>& batch);
  void mark_initialized() { initialized_ = true; }

 private:
  int channels_, spatial_;
  bool initialized_;
  Vec log_scale_, bias_;

  void require_initialized() const;
};

// Per-position channel mixing by an invertible matrix in PLU form; the
// inverse runs triangular solves rather than a dense inversion.
class InvConv1x1Block final : public BijectiveBlock {
 public:
  InvConv1x1Block(PluMatrix w, int spatial = 1);

  std::string type() const override { return "inv_conv1x1"; }
  int dim() const override { return w_.dim * spatial_; }
  int param_count() const override { return w_.param_count(); }
  void get_params(double* out) const override { w_.get_params(out); }
  void set_params(const double* in) override { w_.set_params(in); }

  Vec forward(const Vec& z) const override;
  Vec inverse(const Vec& u) const override;
  double forward_logdet(const Vec& z) const override;
  void vjp_forward(const Vec& z, const Vec& cot_out, double cot_logdet, Vec* cot_z,
                   double* cot_params) const override;
  void vjp_inverse(const Vec& u, const Vec& cot_z, double cot_logdet, Vec* cot_u,
                   double* cot_params) const override;
  nlohmann::json spec() const override;

  const PluMatrix& plu() const { return w_; }
  int channels() const { return w_.dim; }
  int spatial() const { return spatial_; }

 private:
  PluMatrix w_;
  int spatial_;

  Mat gather(const Vec& x) const;
  Vec scatter(const Mat& cols) const;
};

// Two-hidden-layer MLP with tanh units producing scale logits and shifts
// for the coupling layer. The final layer is zero-initialized so the
// coupling starts as the identity.
struct CouplingNet {
  int in = 0, hidden = 0, out = 0;
  Mat w1, w2, w3;
  Vec b1, b2, b3;

  CouplingNet() = default;
  CouplingNet(int in_, int hidden_, int out_);

  int param_count() const;
  void get_params(double* out) const;
  void set_params(const double* in);
  void init_random(Rng& rng);

  Vec eval(const Vec& x) const;
  // Backward through the net; input cotangent accumulates into cot_x.
  void vjp(const Vec& x, const Vec& cot_out, Vec* cot_x, double* cot_params) const;
};

// Affine coupling on an even/odd channel interleave. The passthrough half
// feeds the net; the active half is scaled and shifted:
//   u_act = z_act * exp(s) + t,  s = s_max tanh(raw / s_max).
// Consecutive couplings alternate parity so every coordinate is
// transformed.
class AffineCouplingBlock final : public BijectiveBlock {
 public:
  static constexpr double kScaleMax = 5.0;

  AffineCouplingBlock(int dim, int hidden, int parity);

  std::string type() const override { return "affine_coupling"; }
  int dim() const override { return dim_; }
  int param_count() const override { return net_.param_count(); }
  void get_params(double* out) const override { net_.get_params(out); }
  void set_params(const double* in) override { net_.set_params(in); }

  Vec forward(const Vec& z) const override;
  Vec inverse(const Vec& u) const override;
  double forward_logdet(const Vec& z) const override;
  void vjp_forward(const Vec& z, const Vec& cot_out, double cot_logdet, Vec* cot_z,
                   double* cot_params) const override;
  void vjp_inverse(const Vec& u, const Vec& cot_z, double cot_logdet, Vec* cot_u,
                   double* cot_params) const override;
  nlohmann::json spec() const override;

  int parity() const { return parity_; }
  int hidden() const { return hidden_; }
  CouplingNet& net() { return net_; }
  // Indices of the passthrough half, in order.
  std::vector<int> pass_indices() const;
  std::vector<int> active_indices() const;

 private:
  int dim_, hidden_, parity_;
  CouplingNet net_;

  Vec squash(const Vec& raw) const;
};

}  // namespace cef
