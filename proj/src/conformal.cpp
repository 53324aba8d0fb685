#include "cef/conformal.hpp"

#include <cmath>
#include <utility>

namespace cef {

using nlohmann::json;

void ConformalBlock::check_in(const Vec& u) const {
  if (u.size() != in_dim()) {
    throw ShapeError(type() + ": expected input of dimension " +
                     std::to_string(in_dim()) + ", got " + std::to_string(u.size()));
  }
}

void ConformalBlock::check_out(const Vec& v) const {
  if (v.size() != out_dim()) {
    throw ShapeError(type() + ": expected output-side vector of dimension " +
                     std::to_string(out_dim()) + ", got " + std::to_string(v.size()));
  }
}

double block_log_conformal_factor(const ConformalBlock& block, const Vec& u) {
  return block.log_conformal_factor(u);
}

BlockVjp block_vjp_forward(const ConformalBlock& block, const Vec& u, const Vec& cot_out) {
  BlockVjp r{Vec::Zero(block.in_dim()), Vec::Zero(block.param_count())};
  block.vjp_forward(u, cot_out, &r.input, r.params.data());
  return r;
}

BlockVjp block_vjp_left_inverse(const ConformalBlock& block, const Vec& v, const Vec& cot_u) {
  BlockVjp r{Vec::Zero(block.out_dim()), Vec::Zero(block.param_count())};
  block.vjp_left_inverse(v, cot_u, &r.input, r.params.data());
  return r;
}

BlockVjp block_vjp_log_conformal(const ConformalBlock& block, const Vec& u, double cot) {
  BlockVjp r{Vec::Zero(block.in_dim()), Vec::Zero(block.param_count())};
  block.vjp_log_conformal(u, cot, &r.input, r.params.data());
  return r;
}

// --- Translation -------------------------------------------------------------

void TranslationBlock::get_params(double* out) const {
  Eigen::Map<Vec>(out, offset_.size()) = offset_;
}

void TranslationBlock::set_params(const double* in) {
  offset_ = Eigen::Map<const Vec>(in, offset_.size());
}

Vec TranslationBlock::forward(const Vec& u) const {
  check_in(u);
  return u + offset_;
}

Vec TranslationBlock::left_inverse(const Vec& v) const {
  check_out(v);
  return v - offset_;
}

void TranslationBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                                   double* cot_params) const {
  *cot_u = cot_out;
  Eigen::Map<Vec>(cot_params, offset_.size()) += cot_out;
}

void TranslationBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                        double* cot_params) const {
  *cot_v = cot_u;
  Eigen::Map<Vec>(cot_params, offset_.size()) -= cot_u;
}

json TranslationBlock::spec() const {
  return {{"type", "translation"}, {"dim", in_dim()}};
}

// --- Orthogonal ---------------------------------------------------------------

namespace {

json ortho_param_spec(const OrthogonalParam& q) {
  json j;
  j["param"] = q.kind() == OrthogonalParam::Kind::householder ? "householder" : "skew";
  if (q.kind() == OrthogonalParam::Kind::householder) {
    j["reflections"] = q.householder_count();
  }
  return j;
}

}  // namespace

Vec OrthogonalBlock::forward(const Vec& u) const {
  check_in(u);
  return q_.apply(u);
}

Vec OrthogonalBlock::left_inverse(const Vec& v) const {
  check_out(v);
  return q_.apply_transpose(v);
}

void OrthogonalBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                                  double* cot_params) const {
  Mat cx;
  q_.vjp_apply(Mat(u), Mat(cot_out), &cx, cot_params);
  *cot_u = cx.col(0);
}

void OrthogonalBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                       double* cot_params) const {
  Mat cx;
  q_.vjp_apply_transpose(Mat(v), Mat(cot_u), &cx, cot_params);
  *cot_v = cx.col(0);
}

json OrthogonalBlock::spec() const {
  json j = ortho_param_spec(q_);
  j["type"] = "orthogonal";
  j["dim"] = in_dim();
  return j;
}

// --- Scaling -------------------------------------------------------------------

Vec ScalingBlock::forward(const Vec& u) const {
  check_in(u);
  return std::exp(log_scale_) * u;
}

Vec ScalingBlock::left_inverse(const Vec& v) const {
  check_out(v);
  return std::exp(-log_scale_) * v;
}

double ScalingBlock::log_conformal_factor(const Vec& u) const { return log_scale_; }

void ScalingBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                               double* cot_params) const {
  const double s = std::exp(log_scale_);
  *cot_u = s * cot_out;
  cot_params[0] += s * u.dot(cot_out);
}

void ScalingBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                    double* cot_params) const {
  const double s = std::exp(-log_scale_);
  *cot_v = s * cot_u;
  cot_params[0] -= s * v.dot(cot_u);
}

void ScalingBlock::vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                                     double* cot_params) const {
  *cot_u = Vec::Zero(dim_);
  cot_params[0] += cot;
}

json ScalingBlock::spec() const {
  return {{"type", "scaling"}, {"dim", dim_}};
}

// --- Inversion -------------------------------------------------------------------

Vec InversionBlock::forward(const Vec& u) const {
  check_in(u);
  const double n2 = u.squaredNorm();
  if (std::sqrt(n2) <= kInversionEps) {
    throw SingularityError("inversion: point at or near the origin");
  }
  return u / n2;
}

Vec InversionBlock::left_inverse(const Vec& v) const { return forward(v); }

double InversionBlock::log_conformal_factor(const Vec& u) const {
  const double n = u.norm();
  if (n <= kInversionEps) {
    throw SingularityError("inversion: point at or near the origin");
  }
  return -2.0 * std::log(n);
}

void InversionBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                                 double* cot_params) const {
  const double n2 = u.squaredNorm();
  if (std::sqrt(n2) <= kInversionEps) {
    throw SingularityError("inversion: point at or near the origin");
  }
  *cot_u = cot_out / n2 - (2.0 * u.dot(cot_out) / (n2 * n2)) * u;
}

void InversionBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                      double* cot_params) const {
  vjp_forward(v, cot_u, cot_v, cot_params);
}

void InversionBlock::vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                                       double* cot_params) const {
  const double n2 = u.squaredNorm();
  if (std::sqrt(n2) <= kInversionEps) {
    throw SingularityError("inversion: point at or near the origin");
  }
  *cot_u = (-2.0 * cot / n2) * u;
}

json InversionBlock::spec() const {
  return {{"type", "inversion"}, {"dim", dim_}};
}

// --- Special conformal transformation ------------------------------------------

double SctBlock::denominator(const Vec& u) const {
  return 1.0 - 2.0 * b_.dot(u) + b_.squaredNorm() * u.squaredNorm();
}

void SctBlock::get_params(double* out) const {
  Eigen::Map<Vec>(out, b_.size()) = b_;
}

void SctBlock::set_params(const double* in) {
  b_ = Eigen::Map<const Vec>(in, b_.size());
}

namespace {

Vec sct_apply(const Vec& u, const Vec& b) {
  const double d = 1.0 - 2.0 * b.dot(u) + b.squaredNorm() * u.squaredNorm();
  if (std::abs(d) <= kSctEps) {
    throw SingularityError("sct: denominator within singular guard");
  }
  return (u - u.squaredNorm() * b) / d;
}

// Reverse-mode products through y = (u - |u|^2 b) / D for the pair (u, b).
void sct_vjp(const Vec& u, const Vec& b, const Vec& cot, Vec* cot_u, Vec* cot_b) {
  const double d = 1.0 - 2.0 * b.dot(u) + b.squaredNorm() * u.squaredNorm();
  if (std::abs(d) <= kSctEps) {
    throw SingularityError("sct: denominator within singular guard");
  }
  const double u2 = u.squaredNorm();
  const double b2 = b.squaredNorm();
  const Vec y = (u - u2 * b) / d;
  const double cy = cot.dot(y);
  *cot_u = (cot - 2.0 * b.dot(cot) * u) / d - (cy / d) * (-2.0 * b + 2.0 * b2 * u);
  *cot_b = (-u2 / d) * cot - (cy / d) * (-2.0 * u + 2.0 * u2 * b);
}

}  // namespace

Vec SctBlock::forward(const Vec& u) const {
  check_in(u);
  return sct_apply(u, b_);
}

Vec SctBlock::left_inverse(const Vec& v) const {
  check_out(v);
  return sct_apply(v, -b_);
}

double SctBlock::log_conformal_factor(const Vec& u) const {
  const double d = denominator(u);
  if (std::abs(d) <= kSctEps) {
    throw SingularityError("sct: denominator within singular guard");
  }
  return -std::log(std::abs(d));
}

void SctBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                           double* cot_params) const {
  Vec cb;
  sct_vjp(u, b_, cot_out, cot_u, &cb);
  Eigen::Map<Vec>(cot_params, b_.size()) += cb;
}

void SctBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                double* cot_params) const {
  Vec cb;
  sct_vjp(v, -b_, cot_u, cot_v, &cb);
  Eigen::Map<Vec>(cot_params, b_.size()) -= cb;
}

void SctBlock::vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                                 double* cot_params) const {
  const double d = denominator(u);
  if (std::abs(d) <= kSctEps) {
    throw SingularityError("sct: denominator within singular guard");
  }
  const double b2 = b_.squaredNorm();
  const double u2 = u.squaredNorm();
  *cot_u = (cot / d) * (2.0 * b_ - 2.0 * b2 * u);
  Eigen::Map<Vec>(cot_params, b_.size()) += (cot / d) * (2.0 * u - 2.0 * u2 * b_);
}

json SctBlock::spec() const {
  return {{"type", "sct"}, {"dim", in_dim()}};
}

// --- Zero padding ---------------------------------------------------------------

PadBlock::PadBlock(int in_dim, int out_dim) : in_(in_dim), out_(out_dim) {
  if (out_ < in_) throw ShapeError("pad: output dimension below input dimension");
}

Vec PadBlock::forward(const Vec& u) const {
  check_in(u);
  Vec v = Vec::Zero(out_);
  v.head(in_) = u;
  return v;
}

Vec PadBlock::left_inverse(const Vec& v) const {
  check_out(v);
  return v.head(in_);
}

void PadBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                           double* cot_params) const {
  *cot_u = cot_out.head(in_);
}

void PadBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                double* cot_params) const {
  *cot_v = Vec::Zero(out_);
  cot_v->head(in_) = cot_u;
}

json PadBlock::spec() const {
  return {{"type", "pad"}, {"in", in_}, {"out", out_}};
}

// --- Conformal ReLU ---------------------------------------------------------------

Vec ConformalReluBlock::forward(const Vec& u) const {
  check_in(u);
  const Vec t = q_.apply(u);
  Vec v(2 * t.size());
  v.head(t.size()) = t.cwiseMax(0.0);
  v.tail(t.size()) = (-t).cwiseMax(0.0);
  return v;
}

Vec ConformalReluBlock::left_inverse(const Vec& v) const {
  check_out(v);
  const int d = in_dim();
  return q_.apply_transpose(Vec(v.head(d) - v.tail(d)));
}

void ConformalReluBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                                     double* cot_params) const {
  const int d = in_dim();
  const Vec t = q_.apply(u);
  Vec cot_t(d);
  for (int i = 0; i < d; ++i) {
    cot_t[i] = (t[i] > 0.0 ? cot_out[i] : 0.0) - (t[i] < 0.0 ? cot_out[d + i] : 0.0);
  }
  Mat cx;
  q_.vjp_apply(Mat(u), Mat(cot_t), &cx, cot_params);
  *cot_u = cx.col(0);
}

void ConformalReluBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                          double* cot_params) const {
  const int d = in_dim();
  const Vec w = v.head(d) - v.tail(d);
  Mat cw;
  q_.vjp_apply_transpose(Mat(w), Mat(cot_u), &cw, cot_params);
  cot_v->resize(2 * d);
  cot_v->head(d) = cw.col(0);
  cot_v->tail(d) = -cw.col(0);
}

json ConformalReluBlock::spec() const {
  json j = ortho_param_spec(q_);
  j["type"] = "conformal_relu";
  j["dim"] = in_dim();
  return j;
}

// --- Conditional orthogonal --------------------------------------------------------

ConditionalOrthogonalBlock::ConditionalOrthogonalBlock(int spatial, OrthogonalParam q1,
                                                       OrthogonalParam q2)
    : channels_(q1.dim()), spatial_(spatial), q1_(std::move(q1)), q2_(std::move(q2)) {
  if (q1_.dim() != q2_.dim()) throw ShapeError("conditional orthogonal: Q1/Q2 dim mismatch");
  if (spatial_ < 1) throw ShapeError("conditional orthogonal: spatial extent must be >= 1");
}

void ConditionalOrthogonalBlock::get_params(double* out) const {
  q1_.get_params(out);
  q2_.get_params(out + q1_.param_count());
}

void ConditionalOrthogonalBlock::set_params(const double* in) {
  q1_.set_params(in);
  q2_.set_params(in + q1_.param_count());
}

Mat ConditionalOrthogonalBlock::gather(const Vec& x) const {
  Mat cols(channels_, spatial_);
  for (int c = 0; c < channels_; ++c)
    for (int p = 0; p < spatial_; ++p) cols(c, p) = x[c * spatial_ + p];
  return cols;
}

Vec ConditionalOrthogonalBlock::scatter(const Mat& cols) const {
  Vec x(channels_ * spatial_);
  for (int c = 0; c < channels_; ++c)
    for (int p = 0; p < spatial_; ++p) x[c * spatial_ + p] = cols(c, p);
  return x;
}

Vec ConditionalOrthogonalBlock::forward(const Vec& u) const {
  check_in(u);
  Mat cols = gather(u);
  for (int p = 0; p < spatial_; ++p) {
    const Vec v = cols.col(p);
    cols.col(p) = (v.norm() < 1.0 ? q1_ : q2_).apply(v);
  }
  return scatter(cols);
}

Vec ConditionalOrthogonalBlock::left_inverse(const Vec& v) const {
  check_out(v);
  Mat cols = gather(v);
  for (int p = 0; p < spatial_; ++p) {
    const Vec w = cols.col(p);
    // Orthogonal maps preserve the norm, so the branch test transfers to
    // the output side.
    cols.col(p) = (w.norm() < 1.0 ? q1_ : q2_).apply_transpose(w);
  }
  return scatter(cols);
}

void ConditionalOrthogonalBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                                             double* cot_params) const {
  Mat in_cols = gather(u);
  Mat cot_cols = gather(cot_out);
  Mat out_cols(channels_, spatial_);
  for (int p = 0; p < spatial_; ++p) {
    const Vec v = in_cols.col(p);
    const bool inside = v.norm() < 1.0;
    const OrthogonalParam& q = inside ? q1_ : q2_;
    double* params = inside ? cot_params : cot_params + q1_.param_count();
    Mat cx;
    q.vjp_apply(Mat(v), Mat(Vec(cot_cols.col(p))), &cx, params);
    out_cols.col(p) = cx.col(0);
  }
  *cot_u = scatter(out_cols);
}

void ConditionalOrthogonalBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                                  double* cot_params) const {
  Mat in_cols = gather(v);
  Mat cot_cols = gather(cot_u);
  Mat out_cols(channels_, spatial_);
  for (int p = 0; p < spatial_; ++p) {
    const Vec w = in_cols.col(p);
    const bool inside = w.norm() < 1.0;
    const OrthogonalParam& q = inside ? q1_ : q2_;
    double* params = inside ? cot_params : cot_params + q1_.param_count();
    Mat cx;
    q.vjp_apply_transpose(Mat(w), Mat(Vec(cot_cols.col(p))), &cx, params);
    out_cols.col(p) = cx.col(0);
  }
  *cot_v = scatter(out_cols);
}

json ConditionalOrthogonalBlock::spec() const {
  json j;
  j["type"] = "conditional_orthogonal";
  j["channels"] = channels_;
  j["spatial"] = spatial_;
  j["q1"] = ortho_param_spec(q1_);
  j["q2"] = ortho_param_spec(q2_);
  return j;
}

// --- Orthogonal k x k convolution ----------------------------------------------------

OrthoConvBlock::OrthoConvBlock(int channels, int height, int width, int k, OrthogonalParam q)
    : channels_(channels), height_(height), width_(width), k_(k), q_(std::move(q)) {
  if (height_ % k_ != 0 || width_ % k_ != 0) {
    throw ShapeError("ortho_conv: spatial dims must be divisible by the kernel size");
  }
  if (q_.dim() != k_ * k_ * channels_) {
    throw ShapeError("ortho_conv: filter matrix must have dimension k^2 c");
  }
}

Mat OrthoConvBlock::to_patches(const Vec& x) const {
  const int ph = height_ / k_, pw = width_ / k_;
  Mat p(k_ * k_ * channels_, ph * pw);
  for (int c = 0; c < channels_; ++c)
    for (int pi = 0; pi < ph; ++pi)
      for (int pj = 0; pj < pw; ++pj)
        for (int di = 0; di < k_; ++di)
          for (int dj = 0; dj < k_; ++dj)
            p(c * k_ * k_ + di * k_ + dj, pi * pw + pj) =
                x[c * height_ * width_ + (pi * k_ + di) * width_ + (pj * k_ + dj)];
  return p;
}

Vec OrthoConvBlock::patches_to_in(const Mat& p) const {
  const int ph = height_ / k_, pw = width_ / k_;
  Vec x(in_dim());
  for (int c = 0; c < channels_; ++c)
    for (int pi = 0; pi < ph; ++pi)
      for (int pj = 0; pj < pw; ++pj)
        for (int di = 0; di < k_; ++di)
          for (int dj = 0; dj < k_; ++dj)
            x[c * height_ * width_ + (pi * k_ + di) * width_ + (pj * k_ + dj)] =
                p(c * k_ * k_ + di * k_ + dj, pi * pw + pj);
  return x;
}

Vec OrthoConvBlock::from_patches(const Mat& p) const {
  // Output layout (k^2 c, h/k, w/k): flat index oc * n_patches + patch.
  const Eigen::Index np = p.cols();
  Vec y(p.size());
  for (Eigen::Index oc = 0; oc < p.rows(); ++oc)
    for (Eigen::Index t = 0; t < np; ++t) y[oc * np + t] = p(oc, t);
  return y;
}

Mat OrthoConvBlock::out_to_patches(const Vec& y) const {
  const int np = (height_ / k_) * (width_ / k_);
  Mat p(k_ * k_ * channels_, np);
  for (Eigen::Index oc = 0; oc < p.rows(); ++oc)
    for (int t = 0; t < np; ++t) p(oc, t) = y[oc * np + t];
  return p;
}

Vec OrthoConvBlock::forward(const Vec& u) const {
  check_in(u);
  return from_patches(q_.apply(to_patches(u)));
}

Vec OrthoConvBlock::left_inverse(const Vec& v) const {
  check_out(v);
  return patches_to_in(q_.apply_transpose(out_to_patches(v)));
}

void OrthoConvBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                                 double* cot_params) const {
  Mat cp;
  q_.vjp_apply(to_patches(u), out_to_patches(cot_out), &cp, cot_params);
  *cot_u = patches_to_in(cp);
}

void OrthoConvBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                      double* cot_params) const {
  Mat cy;
  q_.vjp_apply_transpose(out_to_patches(v), to_patches(cot_u), &cy, cot_params);
  *cot_v = from_patches(cy);
}

json OrthoConvBlock::spec() const {
  json j = ortho_param_spec(q_);
  j["type"] = "ortho_conv";
  j["channels"] = channels_;
  j["height"] = height_;
  j["width"] = width_;
  j["k"] = k_;
  return j;
}

// --- Stereographic embedding ---------------------------------------------------------

StereographicBlock::StereographicBlock(double radius) : r_(radius) {
  if (!(r_ > 0.0)) throw Error("stereographic: radius must be positive");
}

Vec StereographicBlock::forward(const Vec& u) const {
  check_in(u);
  const double d = u.squaredNorm() + r_ * r_;
  Vec x(3);
  x[0] = 2.0 * r_ * r_ * u[0] / d;
  x[1] = 2.0 * r_ * r_ * u[1] / d;
  x[2] = r_ * (u.squaredNorm() - r_ * r_) / d;
  return x;
}

Vec StereographicBlock::left_inverse(const Vec& v) const {
  check_out(v);
  const double denom = r_ - v[2];
  if (std::abs(denom) <= kInversionEps) {
    throw SingularityError("stereographic: north pole is outside the range");
  }
  Vec u(2);
  u[0] = r_ * v[0] / denom;
  u[1] = r_ * v[1] / denom;
  return u;
}

double StereographicBlock::log_conformal_factor(const Vec& u) const {
  return std::log(2.0 * r_ * r_) - std::log(u.squaredNorm() + r_ * r_);
}

void StereographicBlock::vjp_forward(const Vec& u, const Vec& cot_out, Vec* cot_u,
                                     double* cot_params) const {
  const double d = u.squaredNorm() + r_ * r_;
  const double s = cot_out[0] * u[0] + cot_out[1] * u[1];
  const double coef = (-4.0 * r_ * r_ * s + 4.0 * r_ * r_ * r_ * cot_out[2]) / (d * d);
  cot_u->resize(2);
  (*cot_u)[0] = 2.0 * r_ * r_ * cot_out[0] / d + coef * u[0];
  (*cot_u)[1] = 2.0 * r_ * r_ * cot_out[1] / d + coef * u[1];
}

void StereographicBlock::vjp_left_inverse(const Vec& v, const Vec& cot_u, Vec* cot_v,
                                          double* cot_params) const {
  const double denom = r_ - v[2];
  if (std::abs(denom) <= kInversionEps) {
    throw SingularityError("stereographic: north pole is outside the range");
  }
  cot_v->resize(3);
  (*cot_v)[0] = r_ * cot_u[0] / denom;
  (*cot_v)[1] = r_ * cot_u[1] / denom;
  (*cot_v)[2] = r_ * (cot_u[0] * v[0] + cot_u[1] * v[1]) / (denom * denom);
}

void StereographicBlock::vjp_log_conformal(const Vec& u, double cot, Vec* cot_u,
                                           double* cot_params) const {
  const double d = u.squaredNorm() + r_ * r_;
  *cot_u = (-2.0 * cot / d) * u;
}

json StereographicBlock::spec() const {
  return {{"type", "stereographic"}, {"radius", r_}};
}

// --- Convenience wrappers --------------------------------------------------------------

Vec translation_fwd(const Vec& u, const Vec& a) { return TranslationBlock(a).forward(u); }
Vec translation_inv(const Vec& v, const Vec& a) { return TranslationBlock(a).left_inverse(v); }
Vec scaling_fwd(const Vec& u, double log_s) {
  return ScalingBlock(static_cast<int>(u.size()), log_s).forward(u);
}
Vec scaling_inv(const Vec& v, double log_s) {
  return ScalingBlock(static_cast<int>(v.size()), log_s).left_inverse(v);
}
Vec inversion_fwd(const Vec& u) { return InversionBlock(static_cast<int>(u.size())).forward(u); }
Vec sct_fwd(const Vec& u, const Vec& b) { return sct_apply(u, b); }
Vec sct_inv(const Vec& v, const Vec& b) { return sct_apply(v, -b); }
Vec pad_zeros_fwd(const Vec& u, int n) {
  return PadBlock(static_cast<int>(u.size()), n).forward(u);
}

}  // namespace cef
