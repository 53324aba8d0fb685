#include "cef/linalg.hpp"

#include <Eigen/LU>
#include <cmath>

namespace cef {

Mat fd_jacobian(const VecFn& f, const Vec& u, double step) {
  if (step <= 0.0) throw Error("fd_jacobian: step must be positive");
  const Eigen::Index m = u.size();
  const Vec f0 = f(u);
  require_finite(f0, "fd_jacobian");
  Mat j(f0.size(), m);
  for (Eigen::Index k = 0; k < m; ++k) {
    Vec up = u, dn = u;
    up[k] += step;
    dn[k] -= step;
    Vec fp = f(up);
    Vec fm = f(dn);
    require_finite(fp, "fd_jacobian");
    require_finite(fm, "fd_jacobian");
    j.col(k) = (fp - fm) / (2.0 * step);
  }
  return j;
}

Mat expm(const Mat& a) {
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm1 / scale >= 0.5) {
    scale *= 2.0;
    ++squarings;
  }
  const Mat b = a / scale;
  const Mat id = Mat::Identity(a.rows(), a.cols());
  Mat t = id;
  for (int k = 12; k >= 1; --k) {
    t = id + (b * t) / static_cast<double>(k);
  }
  for (int i = 0; i < squarings; ++i) t = t * t;
  return t;
}

Mat expm_frechet(const Mat& m, const Mat& e) {
  const Eigen::Index d = m.rows();
  Mat block = Mat::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = m;
  block.bottomRightCorner(d, d) = m;
  block.topRightCorner(d, d) = e;
  return expm(block).topRightCorner(d, d);
}

// ---------------------------------------------------------------------------

void HouseholderStack::get_params(double* out) const {
  for (const Vec& w : vectors) {
    Eigen::Map<Vec>(out, dim) = w;
    out += dim;
  }
}

void HouseholderStack::set_params(const double* in) {
  for (Vec& w : vectors) {
    w = Eigen::Map<const Vec>(in, dim);
    in += dim;
  }
}

void HouseholderStack::init_random(Rng& rng) {
  for (Vec& w : vectors) w = rng.normal_vec(dim);
}

Mat HouseholderStack::apply(const Mat& x) const {
  if (x.rows() != dim) throw ShapeError("householder_apply: dimension mismatch");
  Mat y = x;
  for (const Vec& w : vectors) {
    const double n2 = w.squaredNorm();
    if (n2 < kHouseholderEps * kHouseholderEps) continue;
    y.noalias() -= w * ((2.0 / n2) * (w.transpose() * y));
  }
  return y;
}

Mat HouseholderStack::apply_transpose(const Mat& x) const {
  if (x.rows() != dim) throw ShapeError("householder_apply: dimension mismatch");
  Mat y = x;
  for (auto it = vectors.rbegin(); it != vectors.rend(); ++it) {
    const Vec& w = *it;
    const double n2 = w.squaredNorm();
    if (n2 < kHouseholderEps * kHouseholderEps) continue;
    y.noalias() -= w * ((2.0 / n2) * (w.transpose() * y));
  }
  return y;
}

Mat HouseholderStack::materialize() const {
  return apply(Mat::Identity(dim, dim));
}

namespace {

// Backward through one reflection y = H(w) x given the output cotangent.
// alpha = w^T x, beta = w^T c, n = |w|^2:
//   cot_x = H c
//   cot_w = -(2/n) (x beta^T + c alpha^T) 1 + (4 sum_j alpha_j beta_j / n^2) w
void reflection_vjp(const Vec& w, const Mat& x, const Mat& cot, Mat* cot_x,
                    Eigen::Map<Vec> cot_w) {
  const double n2 = w.squaredNorm();
  if (n2 < kHouseholderEps * kHouseholderEps) {
    *cot_x = cot;  // identity step, frozen gradient
    return;
  }
  const Eigen::RowVectorXd alpha = w.transpose() * x;
  const Eigen::RowVectorXd beta = w.transpose() * cot;
  *cot_x = cot - w * ((2.0 / n2) * beta);
  cot_w += -(2.0 / n2) * (x * beta.transpose() + cot * alpha.transpose()) +
           (4.0 * alpha.dot(beta) / (n2 * n2)) * w;
}

}  // namespace

void HouseholderStack::vjp_apply(const Mat& x, const Mat& cot, Mat* cot_x,
                                 double* cot_params) const {
  // Recompute the chain of intermediates, then walk it backwards.
  std::vector<Mat> inputs;
  inputs.reserve(vectors.size());
  Mat cur = x;
  for (const Vec& w : vectors) {
    inputs.push_back(cur);
    const double n2 = w.squaredNorm();
    if (n2 >= kHouseholderEps * kHouseholderEps) {
      cur -= w * ((2.0 / n2) * (w.transpose() * cur));
    }
  }
  Mat c = cot;
  for (int i = count() - 1; i >= 0; --i) {
    Mat next;
    reflection_vjp(vectors[i], inputs[i], c, &next,
                   Eigen::Map<Vec>(cot_params + static_cast<std::ptrdiff_t>(i) * dim, dim));
    c = std::move(next);
  }
  *cot_x = std::move(c);
}

void HouseholderStack::vjp_apply_transpose(const Mat& x, const Mat& cot, Mat* cot_x,
                                           double* cot_params) const {
  // Q^T applies the same reflections in reverse order.
  std::vector<Mat> inputs(vectors.size());
  Mat cur = x;
  for (int i = count() - 1; i >= 0; --i) {
    inputs[i] = cur;
    const Vec& w = vectors[i];
    const double n2 = w.squaredNorm();
    if (n2 >= kHouseholderEps * kHouseholderEps) {
      cur -= w * ((2.0 / n2) * (w.transpose() * cur));
    }
  }
  Mat c = cot;
  for (int i = 0; i < count(); ++i) {
    Mat next;
    reflection_vjp(vectors[i], inputs[i], c, &next,
                   Eigen::Map<Vec>(cot_params + static_cast<std::ptrdiff_t>(i) * dim, dim));
    c = std::move(next);
  }
  *cot_x = std::move(c);
}

Vec householder_apply(const HouseholderStack& stack, const Vec& v) {
  return stack.apply(Mat(v)).col(0);
}

Vec householder_apply_transpose(const HouseholderStack& stack, const Vec& v) {
  return stack.apply_transpose(Mat(v)).col(0);
}

// ---------------------------------------------------------------------------

void SkewOrthogonal::get_params(double* out) const {
  Eigen::Map<Vec>(out, params.size()) = params;
}

void SkewOrthogonal::set_params(const double* in) {
  params = Eigen::Map<const Vec>(in, params.size());
  rebuild();
}

void SkewOrthogonal::init_random(Rng& rng, double scale) {
  params = scale * rng.normal_vec(params.size());
  rebuild();
}

Mat SkewOrthogonal::skew_matrix() const {
  Mat a = Mat::Zero(dim, dim);
  Eigen::Index k = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j, ++k) {
      a(i, j) = params[k];
      a(j, i) = -params[k];
    }
  }
  return a;
}

void SkewOrthogonal::rebuild() { q_ = expm(skew_matrix()); }

Vec SkewOrthogonal::params_cotangent(const Mat& cot_q) const {
  const Mat cot_a = expm_frechet(skew_matrix().transpose(), cot_q);
  Vec out(params.size());
  Eigen::Index k = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j, ++k) {
      out[k] = cot_a(i, j) - cot_a(j, i);
    }
  }
  return out;
}

Mat skew_expm(const SkewOrthogonal& s) { return s.matrix(); }

// ---------------------------------------------------------------------------

OrthogonalParam::OrthogonalParam(Kind kind, int dim, int householder_count)
    : kind_(kind), dim_(dim) {
  if (kind == Kind::householder) {
    hh_ = HouseholderStack(dim, householder_count > 0 ? householder_count : dim);
  } else {
    skew_ = SkewOrthogonal(dim);
  }
}

int OrthogonalParam::param_count() const {
  return kind_ == Kind::householder ? hh_.param_count() : skew_.param_count();
}

void OrthogonalParam::get_params(double* out) const {
  kind_ == Kind::householder ? hh_.get_params(out) : skew_.get_params(out);
}

void OrthogonalParam::set_params(const double* in) {
  kind_ == Kind::householder ? hh_.set_params(in) : skew_.set_params(in);
}

void OrthogonalParam::init_random(Rng& rng) {
  kind_ == Kind::householder ? hh_.init_random(rng) : skew_.init_random(rng);
}

Mat OrthogonalParam::apply(const Mat& x) const {
  return kind_ == Kind::householder ? hh_.apply(x) : skew_.apply(x);
}

Mat OrthogonalParam::apply_transpose(const Mat& x) const {
  return kind_ == Kind::householder ? hh_.apply_transpose(x) : skew_.apply_transpose(x);
}

Mat OrthogonalParam::materialize() const {
  return kind_ == Kind::householder ? hh_.materialize() : skew_.matrix();
}

void OrthogonalParam::vjp_apply(const Mat& x, const Mat& cot, Mat* cot_x,
                                double* cot_params) const {
  if (kind_ == Kind::householder) {
    hh_.vjp_apply(x, cot, cot_x, cot_params);
  } else {
    *cot_x = skew_.apply_transpose(cot);
    Eigen::Map<Vec>(cot_params, skew_.param_count()) +=
        skew_.params_cotangent(cot * x.transpose());
  }
}

void OrthogonalParam::vjp_apply_transpose(const Mat& x, const Mat& cot, Mat* cot_x,
                                          double* cot_params) const {
  if (kind_ == Kind::householder) {
    hh_.vjp_apply_transpose(x, cot, cot_x, cot_params);
  } else {
    *cot_x = skew_.apply(cot);
    // Y = Q^T X => cot_Q = X cot^T
    Eigen::Map<Vec>(cot_params, skew_.param_count()) +=
        skew_.params_cotangent(x * cot.transpose());
  }
}

// ---------------------------------------------------------------------------

namespace {

Eigen::Index strict_size(int d) {
  return static_cast<Eigen::Index>(d) * (d - 1) / 2;
}

}  // namespace

PluMatrix PluMatrix::identity(int d) {
  PluMatrix p;
  p.dim = d;
  p.perm.resize(d);
  for (int i = 0; i < d; ++i) p.perm[i] = i;
  p.diag_sign.assign(d, 1);
  p.lower = Vec::Zero(strict_size(d));
  p.upper = Vec::Zero(strict_size(d));
  p.diag_log = Vec::Zero(d);
  p.rebuild();
  return p;
}

PluMatrix PluMatrix::from_matrix(const Mat& w) {
  const int d = static_cast<int>(w.rows());
  Eigen::PartialPivLU<Mat> lu(w);
  const Mat l = Mat(lu.matrixLU().triangularView<Eigen::UnitLower>());
  const Mat u = Mat(lu.matrixLU().triangularView<Eigen::Upper>());
  // Eigen factors PA = LU; store the inverse permutation so W = P^{-1} L U.
  const auto pvec = lu.permutationP().indices();

  PluMatrix p;
  p.dim = d;
  p.perm.resize(d);
  for (int i = 0; i < d; ++i) p.perm[pvec[i]] = i;
  p.diag_sign.resize(d);
  p.diag_log = Vec(d);
  p.lower = Vec(strict_size(d));
  p.upper = Vec(strict_size(d));
  for (int i = 0; i < d; ++i) {
    const double uii = u(i, i);
    if (uii == 0.0) throw SingularityError("plu: singular matrix");
    p.diag_sign[i] = uii > 0.0 ? 1 : -1;
    p.diag_log[i] = std::log(std::abs(uii));
  }
  Eigen::Index k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j, ++k) p.lower[k] = l(i, j);
  k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j, ++k) p.upper[k] = u(i, j);
  p.rebuild();
  return p;
}

PluMatrix PluMatrix::random_rotation(int d, Rng& rng) {
  SkewOrthogonal s(d);
  s.init_random(rng, 0.7);
  return from_matrix(s.matrix());
}

void PluMatrix::get_params(double* out) const {
  Eigen::Map<Vec>(out, lower.size()) = lower;
  out += lower.size();
  Eigen::Map<Vec>(out, upper.size()) = upper;
  out += upper.size();
  Eigen::Map<Vec>(out, diag_log.size()) = diag_log;
}

void PluMatrix::set_params(const double* in) {
  lower = Eigen::Map<const Vec>(in, lower.size());
  in += lower.size();
  upper = Eigen::Map<const Vec>(in, upper.size());
  in += upper.size();
  diag_log = Eigen::Map<const Vec>(in, diag_log.size());
  rebuild();
}

void PluMatrix::rebuild() {
  l_ = Mat::Identity(dim, dim);
  u_ = Mat::Zero(dim, dim);
  Eigen::Index k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < i; ++j, ++k) l_(i, j) = lower[k];
  k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j, ++k) u_(i, j) = upper[k];
  for (int i = 0; i < dim; ++i) u_(i, i) = diag_sign[i] * std::exp(diag_log[i]);
  const Mat lu = l_ * u_;
  w_ = Mat(dim, dim);
  for (int i = 0; i < dim; ++i) w_.row(i) = lu.row(perm[i]);
}

Mat PluMatrix::solve(const Mat& y) const {
  Mat t(dim, y.cols());
  for (int i = 0; i < dim; ++i) t.row(perm[i]) = y.row(i);  // P^T y
  l_.triangularView<Eigen::UnitLower>().solveInPlace(t);
  u_.triangularView<Eigen::Upper>().solveInPlace(t);
  return t;
}

void PluMatrix::add_matrix_cotangent(const Mat& cot_w, double* cot_params) const {
  // W row i = (L U) row perm[i]; undo the permutation on the cotangent.
  Mat cot_lu(dim, dim);
  for (int i = 0; i < dim; ++i) cot_lu.row(perm[i]) = cot_w.row(i);
  const Mat cot_l = cot_lu * u_.transpose();
  const Mat cot_u = l_.transpose() * cot_lu;
  Eigen::Map<Vec> grad(cot_params, param_count());
  Eigen::Index k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < i; ++j, ++k) grad[k] += cot_l(i, j);
  Eigen::Index base = lower.size();
  k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j, ++k) grad[base + k] += cot_u(i, j);
  base += upper.size();
  for (int i = 0; i < dim; ++i) grad[base + i] += cot_u(i, i) * u_(i, i);
}

void PluMatrix::vjp_apply(const Mat& z, const Mat& cot, Mat* cot_z,
                          double* cot_params) const {
  *cot_z = w_.transpose() * cot;
  add_matrix_cotangent(cot * z.transpose(), cot_params);
}

void PluMatrix::vjp_solve(const Mat& y, const Mat& cot, Mat* cot_y,
                          double* cot_params) const {
  const Mat z = solve(y);
  // z = W^{-1} y: cot_y = W^{-T} cot, cot_W = -cot_y z^T
  Mat t = cot;
  u_.transpose().triangularView<Eigen::Lower>().solveInPlace(t);
  l_.transpose().triangularView<Eigen::UnitUpper>().solveInPlace(t);
  Mat cy(dim, t.cols());
  for (int i = 0; i < dim; ++i) cy.row(i) = t.row(perm[i]);  // P t
  add_matrix_cotangent(-cy * z.transpose(), cot_params);
  *cot_y = std::move(cy);
}

void PluMatrix::vjp_logdet(double cot, double* cot_params) const {
  Eigen::Map<Vec> grad(cot_params, param_count());
  grad.tail(dim).array() += cot;
}

double plu_logdet(const PluMatrix& w) { return w.logdet(); }

}  // namespace cef
