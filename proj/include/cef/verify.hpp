#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cef/flow.hpp"

namespace cef {

struct CheckResult {
  std::string name;
  double tolerance = 0.0;
  double measured = 0.0;
  bool pass = false;
};

// Property suites over freshly randomized blocks and models. Each check
// reports the worst measured value against its tolerance.
std::vector<CheckResult> verify_conformality(std::uint64_t seed);
std::vector<CheckResult> verify_roundtrip(std::uint64_t seed);
std::vector<CheckResult> verify_gradcheck(std::uint64_t seed);
std::vector<CheckResult> verify_normalization(std::uint64_t seed);

// Runs one suite by name ("conformality", "roundtrip", "gradcheck",
// "normalization", "all"); throws ConfigError for unknown names.
std::vector<CheckResult> run_verify_suite(const std::string& name, std::uint64_t seed);

bool all_pass(const std::vector<CheckResult>& results);
std::string format_check(const CheckResult& r);

// Shared helpers for the suites and the acceptance tests. --------------------

// Worst relative deviation of fd(J)^T fd(J) from lambda^2 I over the given
// number of admissible random points:  |J^T J - l^2 I|_F / (l^2 sqrt(m)).
double conformality_error(const ConformalBlock& block,
                          const std::function<Vec(Rng&)>& draw_point, std::uint64_t seed,
                          int points);

// Worst |g_dagger(g(u)) - u|_inf over random points.
double roundtrip_error(const ConformalBlock& block,
                       const std::function<Vec(Rng&)>& draw_point, std::uint64_t seed,
                       int points);

// Max relative error of all analytic block VJPs (forward, left-inverse,
// log-lambda; both input and parameter cotangents) against central
// differences at one random point.
double block_gradcheck(ConformalBlock& block, const Vec& u, std::uint64_t seed);
double bijective_gradcheck(BijectiveBlock& block, const Vec& z, std::uint64_t seed);

// Max relative error of the batch objective gradient (all parameters of a
// model) against central differences.
double objective_gradcheck(CefModel& model, const Tensor& data, double beta_ll,
                           double alpha, bool with_density);

double relative_error(double analytic, double reference);

// Importance-sampled integral of a square flow's density.
double square_flow_integral(const CefModel& model, std::uint64_t seed,
                            std::int64_t n_fit, std::int64_t n_samples);

// Monte Carlo surface integral of the model density over the unit sphere.
double sphere_surface_integral(const CefModel& model, std::uint64_t seed,
                               std::int64_t n_samples);

// Randomized block factory used by the suites; block_gradcheck mutates
// parameters, so instances are fresh each time.
struct RandomBlockSet {
  std::vector<std::unique_ptr<ConformalBlock>> blocks;
  // Admissible-point samplers aligned with blocks (piecewise blocks stay
  // clear of their nonconformal sets by margins far above the fd step).
  std::vector<std::function<Vec(Rng&)>> samplers;
};
RandomBlockSet make_conformal_catalog(std::uint64_t seed);

// Random conformal stack of the given length starting at dimension m,
// together with a sampler keeping every intermediate point admissible.
struct RandomStack {
  CefModel model;
  std::function<Vec(Rng&)> sampler;
};
RandomStack make_random_stack(std::uint64_t seed, int length, int start_dim);

// Small randomized stump (square flow) on dim d with initialized actnorms.
CefModel make_random_stump(std::uint64_t seed, int dim, int steps, double param_scale);

}  // namespace cef
