#pragma once

#include <cstdint>

#include "cef/tensor.hpp"

namespace cef {

// Unit-sphere dataset: draws x ~ N(mu, I_3) and projects radially onto
// the unit sphere.
struct SphereDatasetConfig {
  Vec mu = (Vec(3) << -1.0, -1.0, 0.0).finished();
  std::int64_t count = 1000;
  std::uint64_t seed = 0;
};

Tensor sample_sphere_dataset(const SphereDatasetConfig& cfg);

// Closed-form density (per unit area) of the radially projected
// N(mu, I_3) on the unit sphere, at spherical angles theta in [0, pi],
// phi in [0, 2 pi).
double target_density_sphere(double phi, double theta, const Vec& mu);
double target_density_sphere_dir(const Vec& t, const Vec& mu);

// Analytic reference embedding of the plane onto the radius-r sphere and
// its conformal factor; the north pole (0, 0, r) is outside the range.
Vec oracle_embed(const Vec& z, double r);
double oracle_log_lambda(const Vec& z, double r);

// Left-inverse of the reference embedding for points on the sphere.
// Requires | |x| - r | <= 1e-6 and distance from the north pole above
// 1e-9 in the last coordinate.
Vec oracle_invert(const Vec& x, double r);

}  // namespace cef
