#include "cef/verify.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cef/bijective.hpp"
#include "cef/conformal.hpp"
#include "cef/linalg.hpp"
#include "cef/rng.hpp"
#include "cef/training.hpp"

namespace cef {

double relative_error(double analytic, double reference) {
  return std::abs(analytic - reference) /
         std::max(1.0, std::abs(analytic) + std::abs(reference));
}

double conformality_error(const ConformalBlock& block,
                          const std::function<Vec(Rng&)>& draw_point, std::uint64_t seed,
                          int points) {
  Rng rng(seed);
  const int m = block.in_dim();
  double worst = 0.0;
  for (int t = 0; t < points; ++t) {
    const Vec u = draw_point(rng);
    const Mat j = fd_jacobian([&](const Vec& p) { return block.forward(p); }, u);
    const double lam2 = std::exp(2.0 * block.log_conformal_factor(u));
    const Mat gram = j.transpose() * j;
    const double err =
        (gram - lam2 * Mat::Identity(m, m)).norm() / (lam2 * std::sqrt(double(m)));
    worst = std::max(worst, err);
  }
  return worst;
}

double roundtrip_error(const ConformalBlock& block,
                       const std::function<Vec(Rng&)>& draw_point, std::uint64_t seed,
                       int points) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < points; ++t) {
    const Vec u = draw_point(rng);
    const Vec back = block.left_inverse(block.forward(u));
    worst = std::max(worst, (back - u).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

namespace {

constexpr double kStep = kFdStep;

// Central difference of a scalar functional with respect to one block
// parameter; restores the parameters afterwards.
template <typename Block>
double fd_param(Block& block, int index, const std::function<double()>& f) {
  Vec p(block.param_count());
  block.get_params(p.data());
  const double orig = p[index];
  p[index] = orig + kStep;
  block.set_params(p.data());
  const double fp = f();
  p[index] = orig - kStep;
  block.set_params(p.data());
  const double fm = f();
  p[index] = orig;
  block.set_params(p.data());
  return (fp - fm) / (2.0 * kStep);
}

double fd_input(const Vec& u, int index, const std::function<double(const Vec&)>& f) {
  Vec up = u, dn = u;
  up[index] += kStep;
  dn[index] -= kStep;
  return (f(up) - f(dn)) / (2.0 * kStep);
}

}  // namespace

double block_gradcheck(ConformalBlock& block, const Vec& u, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  const Vec v = block.forward(u);

  {  // forward map
    const Vec cot = rng.normal_vec(block.out_dim());
    const BlockVjp vjp = block_vjp_forward(block, u, cot);
    for (int i = 0; i < block.in_dim(); ++i) {
      const double fd =
          fd_input(u, i, [&](const Vec& p) { return cot.dot(block.forward(p)); });
      worst = std::max(worst, relative_error(vjp.input[i], fd));
    }
    for (int i = 0; i < block.param_count(); ++i) {
      const double fd = fd_param(block, i, [&] { return cot.dot(block.forward(u)); });
      worst = std::max(worst, relative_error(vjp.params[i], fd));
    }
  }

  {  // left-inverse at an on-range point
    const Vec cot = rng.normal_vec(block.in_dim());
    const BlockVjp vjp = block_vjp_left_inverse(block, v, cot);
    for (int i = 0; i < block.out_dim(); ++i) {
      const double fd =
          fd_input(v, i, [&](const Vec& p) { return cot.dot(block.left_inverse(p)); });
      worst = std::max(worst, relative_error(vjp.input[i], fd));
    }
    for (int i = 0; i < block.param_count(); ++i) {
      const double fd = fd_param(block, i, [&] { return cot.dot(block.left_inverse(v)); });
      worst = std::max(worst, relative_error(vjp.params[i], fd));
    }
  }

  {  // log conformal factor
    const double cot = rng.normal();
    const BlockVjp vjp = block_vjp_log_conformal(block, u, cot);
    for (int i = 0; i < block.in_dim(); ++i) {
      const double fd =
          fd_input(u, i, [&](const Vec& p) { return cot * block.log_conformal_factor(p); });
      worst = std::max(worst, relative_error(vjp.input[i], fd));
    }
    for (int i = 0; i < block.param_count(); ++i) {
      const double fd =
          fd_param(block, i, [&] { return cot * block.log_conformal_factor(u); });
      worst = std::max(worst, relative_error(vjp.params[i], fd));
    }
  }
  return worst;
}

double bijective_gradcheck(BijectiveBlock& block, const Vec& z, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  const Vec u = block.forward(z);

  {  // sampling direction plus logdet
    const Vec cot = rng.normal_vec(block.dim());
    const double cot_ld = rng.normal();
    Vec cz = Vec::Zero(block.dim());
    Vec cp = Vec::Zero(block.param_count());
    block.vjp_forward(z, cot, cot_ld, &cz, cp.data());
    auto value = [&](const Vec& p) {
      return cot.dot(block.forward(p)) + cot_ld * block.forward_logdet(p);
    };
    for (int i = 0; i < block.dim(); ++i) {
      worst = std::max(worst, relative_error(cz[i], fd_input(z, i, value)));
    }
    for (int i = 0; i < block.param_count(); ++i) {
      const double fd = fd_param(*const_cast<BijectiveBlock*>(&block), i,
                                 [&] { return value(z); });
      worst = std::max(worst, relative_error(cp[i], fd));
    }
  }

  {  // inference direction plus logdet at the recovered point
    const Vec cot = rng.normal_vec(block.dim());
    const double cot_ld = rng.normal();
    Vec cu = Vec::Zero(block.dim());
    Vec cp = Vec::Zero(block.param_count());
    block.vjp_inverse(u, cot, cot_ld, &cu, cp.data());
    auto value = [&](const Vec& p) {
      const Vec zz = block.inverse(p);
      return cot.dot(zz) + cot_ld * block.forward_logdet(zz);
    };
    for (int i = 0; i < block.dim(); ++i) {
      worst = std::max(worst, relative_error(cu[i], fd_input(u, i, value)));
    }
    for (int i = 0; i < block.param_count(); ++i) {
      const double fd = fd_param(block, i, [&] { return value(u); });
      worst = std::max(worst, relative_error(cp[i], fd));
    }
  }
  return worst;
}

double objective_gradcheck(CefModel& model, const Tensor& data, double beta_ll,
                           double alpha, bool with_density) {
  std::vector<std::int64_t> rows(data.rows());
  for (std::int64_t i = 0; i < data.rows(); ++i) rows[i] = i;
  const BatchGrads bg =
      batch_gradients(model, data, rows, beta_ll, alpha, true, true, with_density);
  const double inv = 1.0 / static_cast<double>(bg.count);

  double worst = 0.0;
  {
    Vec params = model.get_g_params();
    for (int i = 0; i < params.size(); ++i) {
      const double orig = params[i];
      params[i] = orig + kStep;
      model.set_g_params(params);
      const double fp = batch_loss_value(model, data, rows, beta_ll, alpha, with_density);
      params[i] = orig - kStep;
      model.set_g_params(params);
      const double fm = batch_loss_value(model, data, rows, beta_ll, alpha, with_density);
      params[i] = orig;
      model.set_g_params(params);
      worst = std::max(worst,
                       relative_error(bg.g_grad[i] * inv, (fp - fm) / (2.0 * kStep)));
    }
  }
  {
    Vec params = model.get_h_params();
    for (int i = 0; i < params.size(); ++i) {
      const double orig = params[i];
      params[i] = orig + kStep;
      model.set_h_params(params);
      const double fp = batch_loss_value(model, data, rows, beta_ll, alpha, with_density);
      params[i] = orig - kStep;
      model.set_h_params(params);
      const double fm = batch_loss_value(model, data, rows, beta_ll, alpha, with_density);
      params[i] = orig;
      model.set_h_params(params);
      worst = std::max(worst,
                       relative_error(bg.h_grad[i] * inv, (fp - fm) / (2.0 * kStep)));
    }
  }
  return worst;
}

double square_flow_integral(const CefModel& model, std::uint64_t seed,
                            std::int64_t n_fit, std::int64_t n_samples) {
  const int d = model.latent_dim();

  // Moment-matched, widened Gaussian proposal fitted to model samples.
  const Tensor fit = sample(model, n_fit, Rng::mix(seed, 1));
  Vec mean = Vec::Zero(d);
  for (std::int64_t i = 0; i < n_fit; ++i) mean += fit.row(i);
  mean /= static_cast<double>(n_fit);
  Mat cov = Mat::Zero(d, d);
  for (std::int64_t i = 0; i < n_fit; ++i) {
    const Vec c = fit.row(i) - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(n_fit);
  const Mat q_cov = 2.0 * cov + 0.05 * Mat::Identity(d, d);
  const Eigen::LLT<Mat> llt(q_cov);
  const Mat l = llt.matrixL();
  double log_norm = 0.0;
  for (int i = 0; i < d; ++i) log_norm += std::log(l(i, i));
  const double log_q_const =
      -0.5 * d * std::log(2.0 * std::numbers::pi) - log_norm;

  Rng rng(Rng::mix(seed, 2));
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Vec x = mean + l * rng.normal_vec(d);
    const double log_q = log_q_const - 0.5 * llt.solve(x - mean).dot(x - mean);
    const double log_p = full_change_of_variables(model, x);
    acc += std::exp(log_p - log_q);
  }
  return acc / static_cast<double>(n_samples);
}

double sphere_surface_integral(const CefModel& model, std::uint64_t seed,
                               std::int64_t n_samples) {
  Rng rng(seed);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    Vec t = rng.normal_vec(3);
    while (t.norm() < 1e-12) t = rng.normal_vec(3);
    t /= t.norm();
    try {
      acc += std::exp(log_prob(model, t).log_prob);
    } catch (const SingularityError&) {
      // measure-zero guard neighborhood; contributes nothing
    }
  }
  return 4.0 * std::numbers::pi * acc / static_cast<double>(n_samples);
}

// --- Randomized blocks ----------------------------------------------------------

namespace {

std::function<Vec(Rng&)> gaussian_sampler(int d, double scale = 1.0) {
  return [d, scale](Rng& rng) { return Vec(scale * rng.normal_vec(d)); };
}

OrthogonalParam random_skew(int d, Rng& rng) {
  OrthogonalParam q(OrthogonalParam::Kind::skew, d);
  q.init_random(rng);
  return q;
}

OrthogonalParam random_householder(int d, int k, Rng& rng) {
  OrthogonalParam q(OrthogonalParam::Kind::householder, d, k);
  q.init_random(rng);
  return q;
}

}  // namespace

RandomBlockSet make_conformal_catalog(std::uint64_t seed) {
  Rng rng(seed);
  RandomBlockSet set;
  auto add = [&](std::unique_ptr<ConformalBlock> b, std::function<Vec(Rng&)> s) {
    set.blocks.push_back(std::move(b));
    set.samplers.push_back(std::move(s));
  };

  add(std::make_unique<TranslationBlock>(Vec(rng.normal_vec(3))), gaussian_sampler(3));
  add(std::make_unique<OrthogonalBlock>(random_skew(4, rng)), gaussian_sampler(4));
  add(std::make_unique<OrthogonalBlock>(random_householder(4, 2, rng)),
      gaussian_sampler(4));
  add(std::make_unique<ScalingBlock>(3, 0.5 * rng.normal()), gaussian_sampler(3));

  add(std::make_unique<InversionBlock>(3), [](Rng& r) {
    for (;;) {
      Vec u = r.normal_vec(3);
      if (u.norm() >= 0.3) return u;
    }
  });

  {
    auto sct = std::make_unique<SctBlock>(Vec(0.3 * rng.normal_vec(3)));
    const SctBlock* raw = sct.get();
    add(std::move(sct), [raw](Rng& r) {
      for (;;) {
        Vec u = 0.6 * r.normal_vec(3);
        if (std::abs(raw->denominator(u)) >= 0.2) return u;
      }
    });
  }

  add(std::make_unique<PadBlock>(2, 4), gaussian_sampler(2));

  {
    auto relu = std::make_unique<ConformalReluBlock>(random_skew(3, rng));
    const ConformalReluBlock* raw = relu.get();
    add(std::move(relu), [raw](Rng& r) {
      for (;;) {
        Vec u = r.normal_vec(3);
        const Vec y = raw->forward(u);
        double min_abs = 1e300;
        for (int i = 0; i < 3; ++i) min_abs = std::min(min_abs, y[i] + y[3 + i]);
        if (min_abs >= 1e-3) return u;
      }
    });
  }

  add(std::make_unique<ConditionalOrthogonalBlock>(1, random_skew(3, rng),
                                                   random_skew(3, rng)),
      [](Rng& r) {
        for (;;) {
          Vec u = r.normal_vec(3);
          if (std::abs(u.norm() - 1.0) >= 1e-2) return u;
        }
      });

  add(std::make_unique<ConditionalOrthogonalBlock>(2, random_householder(2, 2, rng),
                                                   random_skew(2, rng)),
      [](Rng& r) {
        for (;;) {
          Vec u = r.normal_vec(4);
          // layout (c, spatial): position p holds (u[p], u[2 + p])
          bool ok = true;
          for (int p = 0; p < 2; ++p) {
            const double n = std::hypot(u[p], u[2 + p]);
            if (std::abs(n - 1.0) < 1e-2) ok = false;
          }
          if (ok) return u;
        }
      });

  add(std::make_unique<OrthoConvBlock>(1, 2, 2, 2, random_skew(4, rng)),
      gaussian_sampler(4));
  add(std::make_unique<OrthoConvBlock>(2, 1, 2, 1, random_householder(2, 2, rng)),
      gaussian_sampler(4));

  add(std::make_unique<StereographicBlock>(1.3), gaussian_sampler(2));
  return set;
}

RandomStack make_random_stack(std::uint64_t seed, int length, int start_dim) {
  Rng rng(seed);
  RandomStack out;
  int d = start_dim;
  for (int i = 0; i < length; ++i) {
    switch (rng.next_u64() % 6) {
      case 0:
        out.model.g_blocks.push_back(
            std::make_unique<TranslationBlock>(Vec(0.5 * rng.normal_vec(d))));
        break;
      case 1:
        out.model.g_blocks.push_back(std::make_unique<OrthogonalBlock>(random_skew(d, rng)));
        break;
      case 2:
        out.model.g_blocks.push_back(std::make_unique<ScalingBlock>(d, 0.4 * rng.normal()));
        break;
      case 3:
        out.model.g_blocks.push_back(
            std::make_unique<SctBlock>(Vec(0.2 * rng.normal_vec(d))));
        break;
      case 4:
        out.model.g_blocks.push_back(std::make_unique<PadBlock>(d, d + 1));
        d += 1;
        break;
      case 5:
        out.model.g_blocks.push_back(std::make_unique<ConditionalOrthogonalBlock>(
            1, random_skew(d, rng), random_skew(d, rng)));
        break;
    }
  }
  const CefModel* raw = &out.model;
  const int m = start_dim;
  out.sampler = [raw, m](Rng& r) {
    for (;;) {
      Vec u = 0.7 * r.normal_vec(m);
      bool ok = true;
      Vec w = u;
      for (const auto& b : raw->g_blocks) {
        if (const auto* sct = dynamic_cast<const SctBlock*>(b.get())) {
          if (std::abs(sct->denominator(w)) < 0.1) {
            ok = false;
            break;
          }
        }
        if (dynamic_cast<const ConditionalOrthogonalBlock*>(b.get()) &&
            std::abs(w.norm() - 1.0) < 1e-2) {
          ok = false;
          break;
        }
        w = b->forward(w);
      }
      if (ok) return u;
    }
  };
  return out;
}

CefModel make_random_stump(std::uint64_t seed, int dim, int steps, double param_scale) {
  Rng rng(seed);
  CefModel model;
  for (int s = 0; s < steps; ++s) {
    model.h_blocks.push_back(std::make_unique<ActNormBlock>(dim, 1, true));
    model.h_blocks.push_back(
        std::make_unique<InvConv1x1Block>(PluMatrix::random_rotation(dim, rng), 1));
    auto coupling = std::make_unique<AffineCouplingBlock>(dim, 16, s % 2);
    coupling->net().init_random(rng);
    model.h_blocks.push_back(std::move(coupling));
  }
  Vec params = model.get_h_params();
  params += param_scale * rng.normal_vec(params.size());
  model.set_h_params(params);
  return model;
}

// --- Suites ------------------------------------------------------------------------

std::vector<CheckResult> verify_conformality(std::uint64_t seed) {
  std::vector<CheckResult> out;
  RandomBlockSet cat = make_conformal_catalog(seed);
  for (std::size_t i = 0; i < cat.blocks.size(); ++i) {
    const double err =
        conformality_error(*cat.blocks[i], cat.samplers[i], Rng::mix(seed, i), 100);
    out.push_back({"conformality/" + cat.blocks[i]->type() + "#" + std::to_string(i),
                   1e-4, err, err < 1e-4});
  }
  for (int s = 0; s < 3; ++s) {
    RandomStack stack = make_random_stack(Rng::mix(seed, 100 + s), 5, 3);
    Rng rng(Rng::mix(seed, 200 + s));
    double worst_conf = 0.0, worst_sum = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Vec u = stack.sampler(rng);
      const Mat j =
          fd_jacobian([&](const Vec& p) { return stack.model.embed(p); }, u);
      double log_lambda = 0.0;
      Vec w = u;
      for (const auto& b : stack.model.g_blocks) {
        log_lambda += b->log_conformal_factor(w);
        w = b->forward(w);
      }
      const double lam2 = std::exp(2.0 * log_lambda);
      const int m = stack.model.latent_dim();
      const double err = (j.transpose() * j - lam2 * Mat::Identity(m, m)).norm() /
                         (lam2 * std::sqrt(double(m)));
      worst_conf = std::max(worst_conf, err);
      // composite log-factor against the fd Gram determinant
      const double fd_log_lambda =
          0.5 * std::log((j.transpose() * j).determinant()) / m;
      worst_sum = std::max(worst_sum, std::abs(fd_log_lambda - log_lambda));
    }
    out.push_back({"conformality/stack#" + std::to_string(s), 1e-4, worst_conf,
                   worst_conf < 1e-4});
    out.push_back({"composition/log_factor_sum#" + std::to_string(s), 1e-4, worst_sum,
                   worst_sum < 1e-4});
  }
  return out;
}

std::vector<CheckResult> verify_roundtrip(std::uint64_t seed) {
  std::vector<CheckResult> out;
  RandomBlockSet cat = make_conformal_catalog(seed);
  for (std::size_t i = 0; i < cat.blocks.size(); ++i) {
    const double err =
        roundtrip_error(*cat.blocks[i], cat.samplers[i], Rng::mix(seed, 300 + i), 100);
    out.push_back({"roundtrip/" + cat.blocks[i]->type() + "#" + std::to_string(i), 1e-8,
                   err, err < 1e-8});
  }
  for (int s = 0; s < 3; ++s) {
    RandomStack stack = make_random_stack(Rng::mix(seed, 400 + s), 5, 3);
    Rng rng(Rng::mix(seed, 500 + s));
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Vec u = stack.sampler(rng);
      const Vec x = stack.model.embed(u);
      const Vec back = project(stack.model, x).u;
      worst = std::max(worst, (back - u).lpNorm<Eigen::Infinity>());
    }
    out.push_back({"roundtrip/stack#" + std::to_string(s), 1e-8, worst, worst < 1e-8});
  }
  return out;
}

std::vector<CheckResult> verify_gradcheck(std::uint64_t seed) {
  std::vector<CheckResult> out;
  {
    RandomBlockSet cat = make_conformal_catalog(seed);
    for (std::size_t i = 0; i < cat.blocks.size(); ++i) {
      Rng rng(Rng::mix(seed, 600 + i));
      const Vec u = cat.samplers[i](rng);
      const double err = block_gradcheck(*cat.blocks[i], u, Rng::mix(seed, 700 + i));
      out.push_back({"gradcheck/" + cat.blocks[i]->type() + "#" + std::to_string(i),
                     1e-4, err, err < 1e-4});
    }
  }
  {
    CefModel stump = make_random_stump(Rng::mix(seed, 800), 4, 1, 0.3);
    Rng rng(Rng::mix(seed, 801));
    for (std::size_t b = 0; b < stump.h_blocks.size(); ++b) {
      const Vec z = rng.normal_vec(4);
      const double err =
          bijective_gradcheck(*stump.h_blocks[b], z, Rng::mix(seed, 810 + b));
      out.push_back({"gradcheck/" + stump.h_blocks[b]->type(), 1e-4, err, err < 1e-4});
    }
  }
  {
    // Whole objectives on a small sphere-style model.
    Rng rng(Rng::mix(seed, 900));
    CefModel model;
    model.g_blocks.push_back(std::make_unique<PadBlock>(2, 3));
    model.g_blocks.push_back(std::make_unique<SctBlock>(Vec(0.2 * rng.normal_vec(3))));
    model.g_blocks.push_back(std::make_unique<OrthogonalBlock>(random_skew(3, rng)));
    model.g_blocks.push_back(
        std::make_unique<TranslationBlock>(Vec(0.3 * rng.normal_vec(3))));
    for (int s = 0; s < 2; ++s) {
      model.h_blocks.push_back(std::make_unique<ActNormBlock>(2, 1, true));
      model.h_blocks.push_back(
          std::make_unique<InvConv1x1Block>(PluMatrix::random_rotation(2, rng), 1));
      auto cpl = std::make_unique<AffineCouplingBlock>(2, 8, s % 2);
      cpl->net().init_random(rng);
      model.h_blocks.push_back(std::move(cpl));
    }
    Vec hp = model.get_h_params();
    hp += 0.2 * rng.normal_vec(hp.size());
    model.set_h_params(hp);

    Tensor data = Tensor::zeros({6, 3});
    for (int i = 0; i < 6; ++i) {
      data.set_row(i, Vec(model.embed(Vec(0.5 * rng.normal_vec(2)))) +
                          Vec(0.05 * rng.normal_vec(3)));
    }
    const double warm = objective_gradcheck(model, data, 0.0, 1.0, false);
    out.push_back({"gradcheck/objective_warmup", 1e-4, warm, warm < 1e-4});
    const double joint = objective_gradcheck(model, data, 1.0, 0.7, true);
    out.push_back({"gradcheck/objective_joint", 1e-4, joint, joint < 1e-4});
  }
  return out;
}

std::vector<CheckResult> verify_normalization(std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (int s = 0; s < 2; ++s) {
    CefModel stump = make_random_stump(Rng::mix(seed, 1000 + s), 4, 2, 0.25);
    const double integral =
        square_flow_integral(stump, Rng::mix(seed, 1100 + s), 4000, 200000);
    out.push_back({"normalization/square_flow#" + std::to_string(s), 0.02,
                   std::abs(integral - 1.0), std::abs(integral - 1.0) < 0.02});
  }
  {
    CefModel model;
    model.g_blocks.push_back(std::make_unique<StereographicBlock>(1.0));
    const double integral = sphere_surface_integral(model, Rng::mix(seed, 1200), 1000000);
    out.push_back({"normalization/sphere_identity_h", 0.02, std::abs(integral - 1.0),
                   std::abs(integral - 1.0) < 0.02});
  }
  {
    CefModel model = make_random_stump(Rng::mix(seed, 1300), 2, 2, 0.25);
    model.g_blocks.push_back(std::make_unique<StereographicBlock>(1.0));
    const double integral = sphere_surface_integral(model, Rng::mix(seed, 1400), 1000000);
    out.push_back({"normalization/sphere_random_h", 0.02, std::abs(integral - 1.0),
                   std::abs(integral - 1.0) < 0.02});
  }
  return out;
}

std::vector<CheckResult> run_verify_suite(const std::string& name, std::uint64_t seed) {
  if (name == "conformality") return verify_conformality(seed);
  if (name == "roundtrip") return verify_roundtrip(seed);
  if (name == "gradcheck") return verify_gradcheck(seed);
  if (name == "normalization") return verify_normalization(seed);
  if (name == "all") {
    std::vector<CheckResult> out;
    for (const char* suite : {"conformality", "roundtrip", "gradcheck", "normalization"}) {
      auto part = run_verify_suite(suite, seed);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  throw ConfigError("unknown verify suite '" + name + "'");
}

bool all_pass(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

std::string format_check(const CheckResult& r) {
  std::ostringstream os;
  os.precision(6);
  os << (r.pass ? "[pass] " : "[FAIL] ") << r.name << " measured=" << std::scientific
     << r.measured << " tol=" << r.tolerance;
  return os.str();
}

}  // namespace cef
