#include "cef/datasets.hpp"

#include <cmath>
#include <numbers>

#include "cef/conformal.hpp"
#include "cef/rng.hpp"

namespace cef {

Tensor sample_sphere_dataset(const SphereDatasetConfig& cfg) {
  if (cfg.count < 1) throw ConfigError("sphere dataset: count must be >= 1");
  if (cfg.mu.size() != 3) throw ShapeError("sphere dataset: mu must be a 3-vector");
  Rng rng(cfg.seed);
  Tensor out = Tensor::zeros({cfg.count, 3});
  for (std::int64_t i = 0; i < cfg.count; ++i) {
    for (;;) {
      const Vec x = cfg.mu + rng.normal_vec(3);
      const double n = x.norm();
      if (n >= 1e-12) {
        out.set_row(i, x / n);
        break;
      }
      // a draw this close to the origin has probability ~0; redraw
    }
  }
  return out;
}

double target_density_sphere_dir(const Vec& t, const Vec& mu) {
  const double s = t.dot(mu);
  const double pref =
      std::exp(-0.5 * mu.squaredNorm()) / (std::pow(2.0, 2.5) * std::pow(std::numbers::pi, 1.5));
  const double sqrt2pi = std::sqrt(2.0 * std::numbers::pi);
  return pref * (2.0 * s + sqrt2pi * (s * s + 1.0) * std::exp(0.5 * s * s) *
                               (std::erf(s / std::numbers::sqrt2) + 1.0));
}

double target_density_sphere(double phi, double theta, const Vec& mu) {
  Vec t(3);
  t << std::cos(phi) * std::sin(theta), std::sin(phi) * std::sin(theta), std::cos(theta);
  return target_density_sphere_dir(t, mu);
}

Vec oracle_embed(const Vec& z, double r) {
  return StereographicBlock(r).forward(z);
}

double oracle_log_lambda(const Vec& z, double r) {
  return StereographicBlock(r).log_conformal_factor(z);
}

Vec oracle_invert(const Vec& x, double r) {
  if (x.size() != 3) throw ShapeError("oracle_invert: expected a 3-vector");
  if (std::abs(x.norm() - r) > 1e-6) {
    throw Error("oracle_invert: point is not on the radius-r sphere");
  }
  if (std::abs(r - x[2]) <= 1e-9) {
    throw SingularityError("oracle_invert: north-pole neighborhood");
  }
  return StereographicBlock(r).left_inverse(x);
}

}  // namespace cef
