#include "cef/flow.hpp"

#include <cmath>
#include <numbers>

#include "cef/rng.hpp"

namespace cef {

int CefModel::latent_dim() const {
  if (!g_blocks.empty()) return g_blocks.front()->in_dim();
  if (!h_blocks.empty()) return h_blocks.front()->dim();
  throw ConfigError("model has no blocks");
}

int CefModel::ambient_dim() const {
  if (!g_blocks.empty()) return g_blocks.back()->out_dim();
  return latent_dim();
}

void CefModel::validate() const {
  if (g_blocks.empty() && h_blocks.empty()) {
    throw ConfigError("model has no blocks");
  }
  int d = latent_dim();
  for (const auto& b : h_blocks) {
    if (b->dim() != d) {
      throw ConfigError("stump block '" + b->type() + "' has dimension " +
                        std::to_string(b->dim()) + ", expected " + std::to_string(d));
    }
  }
  for (const auto& b : g_blocks) {
    if (b->in_dim() != d) {
      throw ConfigError("embedding block '" + b->type() + "' expects dimension " +
                        std::to_string(b->in_dim()) + ", got " + std::to_string(d));
    }
    d = b->out_dim();
  }
}

int CefModel::g_param_count() const {
  int n = 0;
  for (const auto& b : g_blocks) n += b->param_count();
  return n;
}

int CefModel::h_param_count() const {
  int n = 0;
  for (const auto& b : h_blocks) n += b->param_count();
  return n;
}

Vec CefModel::get_g_params() const {
  Vec p(g_param_count());
  double* out = p.data();
  for (const auto& b : g_blocks) {
    b->get_params(out);
    out += b->param_count();
  }
  return p;
}

Vec CefModel::get_h_params() const {
  Vec p(h_param_count());
  double* out = p.data();
  for (const auto& b : h_blocks) {
    b->get_params(out);
    out += b->param_count();
  }
  return p;
}

void CefModel::set_g_params(const Vec& p) {
  if (p.size() != g_param_count()) throw ShapeError("g parameter vector size mismatch");
  const double* in = p.data();
  for (auto& b : g_blocks) {
    b->set_params(in);
    in += b->param_count();
  }
}

void CefModel::set_h_params(const Vec& p) {
  if (p.size() != h_param_count()) throw ShapeError("h parameter vector size mismatch");
  const double* in = p.data();
  for (auto& b : h_blocks) {
    b->set_params(in);
    in += b->param_count();
  }
}

Vec CefModel::embed(const Vec& u) const {
  Vec x = u;
  for (const auto& b : g_blocks) x = b->forward(x);
  return x;
}

Vec CefModel::stump_forward(const Vec& z) const {
  Vec u = z;
  for (const auto& b : h_blocks) u = b->forward(u);
  return u;
}

Vec CefModel::stump_inverse(const Vec& u) const {
  Vec z = u;
  for (auto it = h_blocks.rbegin(); it != h_blocks.rend(); ++it) z = (*it)->inverse(z);
  return z;
}

double log_standard_normal(const Vec& z) {
  constexpr double half_log_2pi = 0.9189385332046727;  // log(2 pi) / 2
  return -half_log_2pi * static_cast<double>(z.size()) - 0.5 * z.squaredNorm();
}

Tensor sample(const CefModel& model, std::int64_t count, std::uint64_t seed) {
  model.validate();
  const int m = model.latent_dim();
  const int n = model.ambient_dim();
  Rng rng(seed);
  Tensor out = Tensor::zeros({count, n});
  for (std::int64_t i = 0; i < count; ++i) {
    int attempts = 0;
    for (;;) {
      try {
        const Vec z = rng.normal_vec(m);
        out.set_row(i, model.embed(model.stump_forward(z)));
        break;
      } catch (const SingularityError&) {
        if (++attempts >= 16) throw;
      }
    }
  }
  return out;
}

Projection project(const CefModel& model, const Vec& x) {
  if (x.size() != model.ambient_dim()) {
    throw ShapeError("project: point dimension does not match the model");
  }
  require_finite(x, "project");
  Vec u = x;
  for (auto it = model.g_blocks.rbegin(); it != model.g_blocks.rend(); ++it) {
    u = (*it)->left_inverse(u);
  }
  return Projection{u, model.embed(u)};
}

DensityReport log_prob(const CefModel& model, const Vec& x) {
  const Projection proj = project(model, x);
  const int m = model.latent_dim();

  DensityReport rep;
  rep.reconstruction_sq = (x - proj.x_proj).squaredNorm();

  // Conformal terms are evaluated along the reconstruction path.
  double sum_log_lambda = 0.0;
  Vec w = proj.u;
  for (const auto& b : model.g_blocks) {
    sum_log_lambda += b->log_conformal_factor(w);
    w = b->forward(w);
  }
  rep.log_conformal = m * sum_log_lambda;

  Vec z = proj.u;
  double logdet_h = 0.0;
  for (auto it = model.h_blocks.rbegin(); it != model.h_blocks.rend(); ++it) {
    z = (*it)->inverse(z);
    logdet_h += (*it)->forward_logdet(z);
  }
  rep.logdet_h = logdet_h;
  rep.log_base = log_standard_normal(z);
  rep.log_prob = rep.log_base - rep.logdet_h - rep.log_conformal;
  return rep;
}

double full_change_of_variables(const CefModel& model, const Vec& x) {
  if (!model.g_blocks.empty()) {
    throw ConfigError("full_change_of_variables requires a square flow (no embedding)");
  }
  const DensityReport rep = log_prob(model, x);
  return rep.log_prob;
}

void initialize_actnorms(CefModel& model, const std::vector<Vec>& u_batch) {
  std::vector<Vec> cur = u_batch;
  for (auto it = model.h_blocks.rbegin(); it != model.h_blocks.rend(); ++it) {
    if (auto* an = dynamic_cast<ActNormBlock*>(it->get()); an && !an->initialized()) {
      an->initialize_from(cur);
    }
    for (Vec& v : cur) v = (*it)->inverse(v);
  }
}

bool actnorms_initialized(const CefModel& model) {
  for (const auto& b : model.h_blocks) {
    if (const auto* an = dynamic_cast<const ActNormBlock*>(b.get());
        an && !an->initialized()) {
      return false;
    }
  }
  return true;
}

}  // namespace cef
