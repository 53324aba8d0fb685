#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cef/bijective.hpp"
#include "cef/conformal.hpp"
#include "cef/tensor.hpp"

namespace cef {

// Decomposition of the manifold density at a (projected) point:
//   log_prob = log_base - logdet_h - log_conformal
// with log_conformal = m * sum_i log lambda_i. reconstruction_sq carries
// the squared distance of the query point to its projection, so
// off-manifold queries get a finite density plus an explicit residual
// rather than a silent -inf.
struct DensityReport {
  double log_prob = 0.0;
  double log_base = 0.0;
  double logdet_h = 0.0;
  double log_conformal = 0.0;
  double reconstruction_sq = 0.0;
};

// Injective flow g o h: a stack of conformal blocks g embedding the
// latent manifold coordinates into data space, a bijective stump h
// normalizing the density on those coordinates, and a standard-normal
// base. Either stack may be empty (identity).
struct CefModel {
  std::vector<std::unique_ptr<ConformalBlock>> g_blocks;
  std::vector<std::unique_ptr<BijectiveBlock>> h_blocks;

  int latent_dim() const;
  int ambient_dim() const;

  // Throws ConfigError if adjacent block dimensions do not chain.
  void validate() const;

  int g_param_count() const;
  int h_param_count() const;
  int param_count() const { return g_param_count() + h_param_count(); }
  Vec get_g_params() const;
  Vec get_h_params() const;
  void set_g_params(const Vec& p);
  void set_h_params(const Vec& p);

  // Forward maps without density bookkeeping.
  Vec embed(const Vec& u) const;        // g(u)
  Vec stump_forward(const Vec& z) const;  // h(z)
  Vec stump_inverse(const Vec& u) const;  // h^{-1}(u)
};

double log_standard_normal(const Vec& z);

// Draws count samples g(h(z)), z ~ N(0, I). Deterministic per seed. A
// sample that lands in a singular guard is retried with fresh noise up to
// 16 times before erroring; the singular set has measure zero, so this is
// a numerical safeguard only.
Tensor sample(const CefModel& model, std::int64_t count, std::uint64_t seed);

// u = g^dagger(x) by chained block left-inverses, and x_proj = g(u).
struct Projection {
  Vec u;
  Vec x_proj;
};
Projection project(const CefModel& model, const Vec& x);

// Exact density at the projection of x, per the report decomposition.
DensityReport log_prob(const CefModel& model, const Vec& x);

// Square-flow special case (no g): the plain change-of-variables density.
double full_change_of_variables(const CefModel& model, const Vec& x);

// Runs the inference direction on the batch, initializing every
// uninitialized ActNorm from the activations it sees.
void initialize_actnorms(CefModel& model, const std::vector<Vec>& u_batch);
bool actnorms_initialized(const CefModel& model);

}  // namespace cef
