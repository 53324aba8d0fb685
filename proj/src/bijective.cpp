#include "cef/bijective.hpp"

#include <cmath>

namespace cef {

using nlohmann::json;

void BijectiveBlock::check_dim(const Vec& v) const {
  if (v.size() != dim()) {
    throw ShapeError(type() + ": expected dimension " + std::to_string(dim()) +
                     ", got " + std::to_string(v.size()));
  }
}

// --- ActNorm -----------------------------------------------------------------

ActNormBlock::ActNormBlock(int channels, int spatial, bool initialized)
    : channels_(channels),
      spatial_(spatial),
      initialized_(initialized),
      log_scale_(Vec::Zero(channels)),
      bias_(Vec::Zero(channels)) {
  if (channels < 1 || spatial < 1) throw ShapeError("actnorm: bad extents");
}

void ActNormBlock::require_initialized() const {
  if (!initialized_) {
    throw StateError("actnorm: used before data-dependent initialization");
  }
}

void ActNormBlock::get_params(double* out) const {
  Eigen::Map<Vec>(out, channels_) = log_scale_;
  Eigen::Map<Vec>(out + channels_, channels_) = bias_;
}

void ActNormBlock::set_params(const double* in) {
  log_scale_ = Eigen::Map<const Vec>(in, channels_);
  bias_ = Eigen::Map<const Vec>(in + channels_, channels_);
}

Vec ActNormBlock::forward(const Vec& z) const {
  require_initialized();
  check_dim(z);
  Vec u(z.size());
  for (int c = 0; c < channels_; ++c) {
    const double s = std::exp(log_scale_[c]);
    u.segment(c * spatial_, spatial_) = s * z.segment(c * spatial_, spatial_).array() + bias_[c];
  }
  return u;
}

Vec ActNormBlock::inverse(const Vec& u) const {
  require_initialized();
  check_dim(u);
  Vec z(u.size());
  for (int c = 0; c < channels_; ++c) {
    const double s = std::exp(-log_scale_[c]);
    z.segment(c * spatial_, spatial_) = s * (u.segment(c * spatial_, spatial_).array() - bias_[c]);
  }
  return z;
}

double ActNormBlock::forward_logdet(const Vec&) const {
  require_initialized();
  return spatial_ * log_scale_.sum();
}

void ActNormBlock::vjp_forward(const Vec& z, const Vec& cot_out, double cot_logdet,
                               Vec* cot_z, double* cot_params) const {
  require_initialized();
  cot_z->resize(dim());
  for (int c = 0; c < channels_; ++c) {
    const double s = std::exp(log_scale_[c]);
    const auto zc = z.segment(c * spatial_, spatial_);
    const auto cc = cot_out.segment(c * spatial_, spatial_);
    cot_z->segment(c * spatial_, spatial_) = s * cc;
    cot_params[c] += s * zc.dot(cc) + cot_logdet * spatial_;
    cot_params[channels_ + c] += cc.sum();
  }
}

void ActNormBlock::vjp_inverse(const Vec& u, const Vec& cot_z, double cot_logdet,
                               Vec* cot_u, double* cot_params) const {
  require_initialized();
  const Vec z = inverse(u);
  cot_u->resize(dim());
  for (int c = 0; c < channels_; ++c) {
    const double s = std::exp(-log_scale_[c]);
    const auto zc = z.segment(c * spatial_, spatial_);
    const auto cc = cot_z.segment(c * spatial_, spatial_);
    cot_u->segment(c * spatial_, spatial_) = s * cc;
    cot_params[c] += -zc.dot(cc) + cot_logdet * spatial_;
    cot_params[channels_ + c] += -s * cc.sum();
  }
}

void ActNormBlock::initialize_from(const std::vector<Vec>& batch) {
  if (batch.empty()) throw StateError("actnorm: empty initialization batch");
  const double n = static_cast<double>(batch.size()) * spatial_;
  for (int c = 0; c < channels_; ++c) {
    double mean = 0.0;
    for (const Vec& u : batch) mean += u.segment(c * spatial_, spatial_).sum();
    mean /= n;
    double var = 0.0;
    for (const Vec& u : batch) {
      var += (u.segment(c * spatial_, spatial_).array() - mean).square().sum();
    }
    var /= n;
    const double std = std::sqrt(std::max(var, 1e-16));
    bias_[c] = mean;
    log_scale_[c] = std::log(std);
  }
  initialized_ = true;
}

json ActNormBlock::spec() const {
  return {{"type", "actnorm"},
          {"channels", channels_},
          {"spatial", spatial_},
          {"initialized", initialized_}};
}

// --- Invertible 1x1 convolution ------------------------------------------------

InvConv1x1Block::InvConv1x1Block(PluMatrix w, int spatial)
    : w_(std::move(w)), spatial_(spatial) {
  if (spatial_ < 1) throw ShapeError("inv_conv1x1: spatial extent must be >= 1");
}

Mat InvConv1x1Block::gather(const Vec& x) const {
  Mat cols(w_.dim, spatial_);
  for (int c = 0; c < w_.dim; ++c)
    for (int p = 0; p < spatial_; ++p) cols(c, p) = x[c * spatial_ + p];
  return cols;
}

Vec InvConv1x1Block::scatter(const Mat& cols) const {
  Vec x(dim());
  for (int c = 0; c < w_.dim; ++c)
    for (int p = 0; p < spatial_; ++p) x[c * spatial_ + p] = cols(c, p);
  return x;
}

Vec InvConv1x1Block::forward(const Vec& z) const {
  check_dim(z);
  return scatter(w_.apply(gather(z)));
}

Vec InvConv1x1Block::inverse(const Vec& u) const {
  check_dim(u);
  return scatter(w_.solve(gather(u)));
}

double InvConv1x1Block::forward_logdet(const Vec&) const {
  return spatial_ * w_.logdet();
}

void InvConv1x1Block::vjp_forward(const Vec& z, const Vec& cot_out, double cot_logdet,
                                  Vec* cot_z, double* cot_params) const {
  Mat cz;
  w_.vjp_apply(gather(z), gather(cot_out), &cz, cot_params);
  *cot_z = scatter(cz);
  w_.vjp_logdet(cot_logdet * spatial_, cot_params);
}

void InvConv1x1Block::vjp_inverse(const Vec& u, const Vec& cot_z, double cot_logdet,
                                  Vec* cot_u, double* cot_params) const {
  Mat cu;
  w_.vjp_solve(gather(u), gather(cot_z), &cu, cot_params);
  *cot_u = scatter(cu);
  w_.vjp_logdet(cot_logdet * spatial_, cot_params);
}

json InvConv1x1Block::spec() const {
  json j;
  j["type"] = "inv_conv1x1";
  j["channels"] = w_.dim;
  j["spatial"] = spatial_;
  j["perm"] = w_.perm;
  j["diag_sign"] = w_.diag_sign;
  return j;
}

// --- Coupling net ----------------------------------------------------------------

CouplingNet::CouplingNet(int in_, int hidden_, int out_)
    : in(in_),
      hidden(hidden_),
      out(out_),
      w1(Mat::Zero(hidden_, in_)),
      w2(Mat::Zero(hidden_, hidden_)),
      w3(Mat::Zero(out_, hidden_)),
      b1(Vec::Zero(hidden_)),
      b2(Vec::Zero(hidden_)),
      b3(Vec::Zero(out_)) {}

int CouplingNet::param_count() const {
  return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() +
                          b3.size());
}

namespace {

double* copy_out(const Mat& m, double* p) {
  Eigen::Map<Mat>(p, m.rows(), m.cols()) = m;
  return p + m.size();
}

const double* copy_in(Mat& m, const double* p) {
  m = Eigen::Map<const Mat>(p, m.rows(), m.cols());
  return p + m.size();
}

}  // namespace

void CouplingNet::get_params(double* p) const {
  p = copy_out(w1, p);
  Eigen::Map<Vec>(p, b1.size()) = b1;
  p += b1.size();
  p = copy_out(w2, p);
  Eigen::Map<Vec>(p, b2.size()) = b2;
  p += b2.size();
  p = copy_out(w3, p);
  Eigen::Map<Vec>(p, b3.size()) = b3;
}

void CouplingNet::set_params(const double* p) {
  p = copy_in(w1, p);
  b1 = Eigen::Map<const Vec>(p, b1.size());
  p += b1.size();
  p = copy_in(w2, p);
  b2 = Eigen::Map<const Vec>(p, b2.size());
  p += b2.size();
  p = copy_in(w3, p);
  b3 = Eigen::Map<const Vec>(p, b3.size());
}

void CouplingNet::init_random(Rng& rng) {
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = s1 * rng.normal();
  for (Eigen::Index i = 0; i < w2.size(); ++i) w2.data()[i] = s2 * rng.normal();
  w3.setZero();  // identity start
  b1.setZero();
  b2.setZero();
  b3.setZero();
}

Vec CouplingNet::eval(const Vec& x) const {
  const Vec h1 = (w1 * x + b1).array().tanh();
  const Vec h2 = (w2 * h1 + b2).array().tanh();
  return w3 * h2 + b3;
}

void CouplingNet::vjp(const Vec& x, const Vec& cot_out, Vec* cot_x,
                      double* cot_params) const {
  const Vec h1 = (w1 * x + b1).array().tanh();
  const Vec h2 = (w2 * h1 + b2).array().tanh();

  const Vec d2 = (w3.transpose() * cot_out).cwiseProduct(
      (1.0 - h2.array().square()).matrix());
  const Vec d1 = (w2.transpose() * d2).cwiseProduct(
      (1.0 - h1.array().square()).matrix());

  double* p = cot_params;
  Eigen::Map<Mat>(p, w1.rows(), w1.cols()) += d1 * x.transpose();
  p += w1.size();
  Eigen::Map<Vec>(p, b1.size()) += d1;
  p += b1.size();
  Eigen::Map<Mat>(p, w2.rows(), w2.cols()) += d2 * h1.transpose();
  p += w2.size();
  Eigen::Map<Vec>(p, b2.size()) += d2;
  p += b2.size();
  Eigen::Map<Mat>(p, w3.rows(), w3.cols()) += cot_out * h2.transpose();
  p += w3.size();
  Eigen::Map<Vec>(p, b3.size()) += cot_out;

  *cot_x += w1.transpose() * d1;
}

// --- Affine coupling ----------------------------------------------------------------

AffineCouplingBlock::AffineCouplingBlock(int dim, int hidden, int parity)
    : dim_(dim), hidden_(hidden), parity_(parity), net_(dim / 2, hidden, dim) {
  if (dim % 2 != 0) throw ShapeError("affine_coupling: dimension must be even");
  if (parity != 0 && parity != 1) throw ShapeError("affine_coupling: parity must be 0 or 1");
}

std::vector<int> AffineCouplingBlock::pass_indices() const {
  std::vector<int> idx;
  for (int i = parity_; i < dim_; i += 2) idx.push_back(i);
  return idx;
}

std::vector<int> AffineCouplingBlock::active_indices() const {
  std::vector<int> idx;
  for (int i = 1 - parity_; i < dim_; i += 2) idx.push_back(i);
  return idx;
}

Vec AffineCouplingBlock::squash(const Vec& raw) const {
  return kScaleMax * (raw / kScaleMax).array().tanh();
}

Vec AffineCouplingBlock::forward(const Vec& z) const {
  check_dim(z);
  const int half = dim_ / 2;
  Vec pass(half), act(half);
  const auto pi = pass_indices();
  const auto ai = active_indices();
  for (int i = 0; i < half; ++i) {
    pass[i] = z[pi[i]];
    act[i] = z[ai[i]];
  }
  const Vec nn = net_.eval(pass);
  const Vec s = squash(nn.head(half));
  const Vec t = nn.tail(half);
  Vec u(dim_);
  for (int i = 0; i < half; ++i) {
    u[pi[i]] = pass[i];
    u[ai[i]] = act[i] * std::exp(s[i]) + t[i];
  }
  return u;
}

Vec AffineCouplingBlock::inverse(const Vec& u) const {
  check_dim(u);
  const int half = dim_ / 2;
  Vec pass(half), act(half);
  const auto pi = pass_indices();
  const auto ai = active_indices();
  for (int i = 0; i < half; ++i) {
    pass[i] = u[pi[i]];
    act[i] = u[ai[i]];
  }
  const Vec nn = net_.eval(pass);
  const Vec s = squash(nn.head(half));
  const Vec t = nn.tail(half);
  Vec z(dim_);
  for (int i = 0; i < half; ++i) {
    z[pi[i]] = pass[i];
    z[ai[i]] = (act[i] - t[i]) * std::exp(-s[i]);
  }
  return z;
}

double AffineCouplingBlock::forward_logdet(const Vec& z) const {
  check_dim(z);
  const int half = dim_ / 2;
  Vec pass(half);
  const auto pi = pass_indices();
  for (int i = 0; i < half; ++i) pass[i] = z[pi[i]];
  const Vec nn = net_.eval(pass);
  return squash(nn.head(half)).sum();
}

void AffineCouplingBlock::vjp_forward(const Vec& z, const Vec& cot_out, double cot_logdet,
                                      Vec* cot_z, double* cot_params) const {
  const int half = dim_ / 2;
  const auto pi = pass_indices();
  const auto ai = active_indices();
  Vec pass(half), act(half), cot_pass(half), cot_act(half);
  for (int i = 0; i < half; ++i) {
    pass[i] = z[pi[i]];
    act[i] = z[ai[i]];
    cot_pass[i] = cot_out[pi[i]];
    cot_act[i] = cot_out[ai[i]];
  }
  const Vec nn = net_.eval(pass);
  const Vec raw = nn.head(half);
  const Vec s = squash(raw);
  const Vec es = s.array().exp();

  // u_act = act * e^s + t, logdet = sum(s)
  Vec cot_nn(dim_);
  const Vec cot_s = cot_act.cwiseProduct(act).cwiseProduct(es).array() + cot_logdet;
  cot_nn.head(half) =
      cot_s.cwiseProduct((1.0 - (s / kScaleMax).array().square()).matrix());
  cot_nn.tail(half) = cot_act;

  Vec cot_pass_total = cot_pass;
  net_.vjp(pass, cot_nn, &cot_pass_total, cot_params);

  cot_z->resize(dim_);
  for (int i = 0; i < half; ++i) {
    (*cot_z)[pi[i]] = cot_pass_total[i];
    (*cot_z)[ai[i]] = cot_act[i] * es[i];
  }
}

void AffineCouplingBlock::vjp_inverse(const Vec& u, const Vec& cot_zv, double cot_logdet,
                                      Vec* cot_u, double* cot_params) const {
  const int half = dim_ / 2;
  const auto pi = pass_indices();
  const auto ai = active_indices();
  Vec pass(half), act(half), cot_pass(half), cot_act(half);
  for (int i = 0; i < half; ++i) {
    pass[i] = u[pi[i]];
    act[i] = u[ai[i]];
    cot_pass[i] = cot_zv[pi[i]];
    cot_act[i] = cot_zv[ai[i]];
  }
  const Vec nn = net_.eval(pass);
  const Vec raw = nn.head(half);
  const Vec s = squash(raw);
  const Vec ems = (-s).array().exp();
  const Vec z_act = (act - nn.tail(half)).cwiseProduct(ems);

  // z_act = (u_act - t) e^{-s}; the logdet cotangent still applies to
  // sum(s) evaluated at the recovered z-side point, whose passthrough
  // half equals the u-side one.
  Vec cot_nn(dim_);
  const Vec cot_s = (-cot_act.cwiseProduct(z_act)).array() + cot_logdet;
  cot_nn.head(half) =
      cot_s.cwiseProduct((1.0 - (s / kScaleMax).array().square()).matrix());
  cot_nn.tail(half) = -cot_act.cwiseProduct(ems);

  Vec cot_pass_total = cot_pass;
  net_.vjp(pass, cot_nn, &cot_pass_total, cot_params);

  cot_u->resize(dim_);
  for (int i = 0; i < half; ++i) {
    (*cot_u)[pi[i]] = cot_pass_total[i];
    (*cot_u)[ai[i]] = cot_act[i] * ems[i];
  }
}

json AffineCouplingBlock::spec() const {
  return {{"type", "affine_coupling"},
          {"dim", dim_},
          {"hidden", hidden_},
          {"parity", parity_}};
}

}  // namespace cef
