#include "cef/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "cef/rng.hpp"

namespace cef {

void TrainConfig::validate() const {
  if (warmup_epochs < 0 || main_epochs < 0 || finetune_epochs < 0) {
    throw ConfigError("train: epoch counts must be >= 0");
  }
  if (alpha < 0.0 || beta_ll < 0.0) throw ConfigError("train: loss weights must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
}

void adam_step(AdamState& state, Vec& params, const Vec& grads, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: size mismatch");
  }
  if (!all_finite(grads)) throw NumericError("adam_step: non-finite gradient");
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Vec mhat = state.m / c1;
  const Vec vhat = state.v / c2;
  params -= lr * mhat.cwiseQuotient(vhat.cwiseSqrt().array().operator+(state.eps).matrix());
}

std::string EpochMetrics::line(bool with_wall) const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch=" << epoch << " phase=" << phase << " nll=" << nll << " recon=" << recon
     << " total=" << total;
  if (with_wall) os << " wall_ms=" << wall_ms;
  return os.str();
}

int thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("CEF_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

namespace {

struct SampleTerms {
  double nll = 0.0;
  double recon = 0.0;
};

// Evaluates one sample's loss terms and accumulates parameter gradients of
// total = beta_ll * nll + alpha * recon. The graph is
//   x --(g left-inverses)--> u --(g forwards)--> x_proj   (recon, lambdas)
//   u --(h inverses)--> z                                  (base, logdets)
// and gradients flow back through every path a parameter touches,
// including the projection itself.
SampleTerms sample_grads(const CefModel& model, const Vec& x, double beta_ll, double alpha,
                         bool need_g, bool need_h, bool with_density, Vec* g_grad,
                         Vec* h_grad) {
  const int m = model.latent_dim();
  const size_t gk = model.g_blocks.size();
  const size_t hk = model.h_blocks.size();

  // Inference chain through the embedding.
  std::vector<Vec> vs(gk + 1);
  vs[gk] = x;
  for (size_t i = gk; i-- > 0;) {
    vs[i] = model.g_blocks[i]->left_inverse(vs[i + 1]);
  }
  const Vec& u = vs[0];

  // Reconstruction chain.
  std::vector<Vec> ws(gk + 1);
  ws[0] = u;
  for (size_t i = 0; i < gk; ++i) ws[i + 1] = model.g_blocks[i]->forward(ws[i]);
  const Vec& x_proj = ws[gk];

  SampleTerms terms;
  terms.recon = (x - x_proj).squaredNorm();

  std::vector<Vec> ys;
  if (with_density) {
    ys.resize(hk + 1);
    ys[hk] = u;
    double logdet_h = 0.0;
    for (size_t b = hk; b-- > 0;) {
      ys[b] = model.h_blocks[b]->inverse(ys[b + 1]);
      logdet_h += model.h_blocks[b]->forward_logdet(ys[b]);
    }
    double sum_log_lambda = 0.0;
    for (size_t i = 0; i < gk; ++i) {
      sum_log_lambda += model.g_blocks[i]->log_conformal_factor(ws[i]);
    }
    terms.nll = -log_standard_normal(ys[0]) + logdet_h + m * sum_log_lambda;
  }

  if (!need_g && !need_h) return terms;

  // Parameter offsets within the flat gradient vectors.
  auto g_slice = [&](size_t i) {
    int off = 0;
    for (size_t j = 0; j < i; ++j) off += model.g_blocks[j]->param_count();
    return g_grad->data() + off;
  };
  auto h_slice = [&](size_t b) {
    int off = 0;
    for (size_t j = 0; j < b; ++j) off += model.h_blocks[j]->param_count();
    return h_grad->data() + off;
  };

  // Stump backward: d nll / d z = z, each logdet cotangent is beta_ll.
  // Runs whenever any gradient needs the density path, since the base and
  // logdet terms reach the embedding parameters through u as well.
  Vec cot_u_from_h;
  Vec h_scratch;
  if (with_density && (need_h || need_g)) {
    if (!need_h) h_scratch = Vec::Zero(model.h_param_count());
    Vec cot_z = beta_ll * ys[0];
    for (size_t b = 0; b < hk; ++b) {
      Vec cot_next;
      double* slot = need_h ? h_slice(b) : h_scratch.data();
      model.h_blocks[b]->vjp_inverse(ys[b + 1], cot_z, beta_ll, &cot_next, slot);
      cot_z = std::move(cot_next);
    }
    cot_u_from_h = cot_z;
  }

  if (!need_g) return terms;

  // Reconstruction-chain backward, picking up each block's conformal
  // factor on the way down.
  Vec cot_w = (2.0 * alpha) * (x_proj - x);
  for (size_t i = gk; i-- > 0;) {
    const ConformalBlock& block = *model.g_blocks[i];
    Vec cot_prev;
    block.vjp_forward(ws[i], cot_w, &cot_prev, g_slice(i));
    if (with_density && beta_ll != 0.0) {
      Vec cot_lambda;
      block.vjp_log_conformal(ws[i], beta_ll * m, &cot_lambda, g_slice(i));
      cot_prev += cot_lambda;
    }
    cot_w = std::move(cot_prev);
  }

  Vec cot_u_total = cot_w;
  if (cot_u_from_h.size() == cot_u_total.size()) cot_u_total += cot_u_from_h;
  // The projection residual also differentiates through u via x_proj only;
  // the direct d recon / d x term has no parameter dependence.

  // Inference-chain backward down to the data point.
  Vec cot_v = std::move(cot_u_total);
  for (size_t i = 0; i < gk; ++i) {
    Vec cot_next;
    model.g_blocks[i]->vjp_left_inverse(vs[i + 1], cot_v, &cot_next, g_slice(i));
    cot_v = std::move(cot_next);
  }
  return terms;
}

std::vector<std::int64_t> shuffled_indices(std::int64_t n, std::uint64_t seed) {
  std::vector<std::int64_t> idx(n);
  for (std::int64_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(idx[i], idx[std::min(j, i)]);
  }
  return idx;
}

constexpr std::int64_t kChunk = 32;

}  // namespace

BatchGrads batch_gradients(const CefModel& model, const Tensor& data,
                           const std::vector<std::int64_t>& rows, double beta_ll,
                           double alpha, bool need_g, bool need_h, bool with_density) {
  const auto n = static_cast<std::int64_t>(rows.size());
  const std::int64_t nchunks = (n + kChunk - 1) / kChunk;

  struct Partial {
    Vec g, h;
    double nll = 0.0, recon = 0.0;
  };
  std::vector<Partial> parts(nchunks);

  auto work = [&](std::int64_t c) {
    Partial& p = parts[c];
    p.g = Vec::Zero(need_g ? model.g_param_count() : 0);
    p.h = Vec::Zero(need_h ? model.h_param_count() : 0);
    const std::int64_t lo = c * kChunk;
    const std::int64_t hi = std::min(n, lo + kChunk);
    for (std::int64_t i = lo; i < hi; ++i) {
      const SampleTerms t = sample_grads(model, data.row(rows[i]), beta_ll, alpha, need_g,
                                         need_h, with_density, &p.g, &p.h);
      p.nll += t.nll;
      p.recon += t.recon;
    }
  };

  const int workers = std::min<std::int64_t>(thread_count(), nchunks);
  if (workers <= 1) {
    for (std::int64_t c = 0; c < nchunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::int64_t> next{0};
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::int64_t c = next.fetch_add(1);
          if (c >= nchunks) break;
          work(c);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  BatchGrads out;
  out.g_grad = Vec::Zero(need_g ? model.g_param_count() : 0);
  out.h_grad = Vec::Zero(need_h ? model.h_param_count() : 0);
  out.count = n;
  // Fixed-order reduction keeps results independent of scheduling.
  for (const Partial& p : parts) {
    if (need_g) out.g_grad += p.g;
    if (need_h) out.h_grad += p.h;
    out.nll_sum += p.nll;
    out.recon_sum += p.recon;
  }
  return out;
}

double batch_loss_value(const CefModel& model, const Tensor& data,
                        const std::vector<std::int64_t>& rows, double beta_ll,
                        double alpha, bool with_density) {
  double total = 0.0;
  for (const auto r : rows) {
    const Vec x = data.row(r);
    double nll = 0.0;
    double recon;
    if (with_density) {
      const DensityReport rep = log_prob(model, x);
      nll = -rep.log_prob;
      recon = rep.reconstruction_sq;
    } else {
      const Projection proj = project(model, x);
      recon = (x - proj.x_proj).squaredNorm();
    }
    total += beta_ll * nll + alpha * recon;
  }
  return total / static_cast<double>(rows.size());
}

namespace {

struct PhaseWeights {
  double beta_ll, alpha;
  bool need_g, need_h, with_density;
};

EpochMetrics run_epoch(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                       const PhaseWeights& pw, AdamState* g_state, AdamState* h_state,
                       std::uint64_t shuffle_seed, const char* phase) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t n = data.rows();
  const auto order = shuffled_indices(n, shuffle_seed);

  double nll_sum = 0.0, recon_sum = 0.0;
  for (std::int64_t start = 0; start < n; start += cfg.batch_size) {
    const std::int64_t stop = std::min(n, start + static_cast<std::int64_t>(cfg.batch_size));
    const std::vector<std::int64_t> rows(order.begin() + start, order.begin() + stop);
    BatchGrads bg = batch_gradients(model, data, rows, pw.beta_ll, pw.alpha, pw.need_g,
                                    pw.need_h, pw.with_density);
    nll_sum += bg.nll_sum;
    recon_sum += bg.recon_sum;

    const double inv = 1.0 / static_cast<double>(bg.count);
    Vec g_grad = bg.g_grad * inv;
    Vec h_grad = bg.h_grad * inv;
    if (!all_finite(g_grad) || !all_finite(h_grad) || !std::isfinite(bg.nll_sum) ||
        !std::isfinite(bg.recon_sum)) {
      throw NumericError("training: non-finite loss or gradient in phase " +
                         std::string(phase));
    }
    const double norm =
        std::sqrt(g_grad.squaredNorm() + h_grad.squaredNorm());
    if (norm > kGradClipNorm) {
      const double scale = kGradClipNorm / norm;
      g_grad *= scale;
      h_grad *= scale;
    }
    if (pw.need_g && g_state) {
      Vec params = model.get_g_params();
      adam_step(*g_state, params, g_grad, cfg.learning_rate);
      model.set_g_params(params);
    }
    if (pw.need_h && h_state) {
      Vec params = model.get_h_params();
      adam_step(*h_state, params, h_grad, cfg.learning_rate);
      model.set_h_params(params);
    }
  }

  EpochMetrics mtx;
  mtx.phase = phase;
  mtx.nll = nll_sum / static_cast<double>(n);
  mtx.recon = recon_sum / static_cast<double>(n);
  mtx.total = pw.beta_ll * mtx.nll + pw.alpha * mtx.recon;
  mtx.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return mtx;
}

}  // namespace

EpochMetrics warmup_epoch(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                          AdamState& g_state, std::uint64_t shuffle_seed) {
  return run_epoch(model, data, cfg, {0.0, 1.0, true, false, false}, &g_state, nullptr,
                   shuffle_seed, "warmup");
}

EpochMetrics sequential_epoch(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                              AdamState& h_state, std::uint64_t shuffle_seed) {
  return run_epoch(model, data, cfg, {1.0, 0.0, false, true, true}, nullptr, &h_state,
                   shuffle_seed, "sequential");
}

EpochMetrics joint_epoch(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                         AdamState& g_state, AdamState& h_state, std::uint64_t shuffle_seed) {
  return run_epoch(model, data, cfg, {cfg.beta_ll, cfg.alpha, true, true, true}, &g_state,
                   &h_state, shuffle_seed, "joint");
}

TrainResult run_training(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  if (data.rows() < 1) throw ConfigError("training: empty dataset");

  TrainResult result;
  int epoch_no = 0;
  auto emit = [&](EpochMetrics m, int global_epoch) {
    m.epoch = global_epoch;
    if (on_epoch) on_epoch(m);
    result.metrics.push_back(std::move(m));
  };

  {
    AdamState g_state(model.g_param_count());
    for (int e = 0; e < cfg.warmup_epochs; ++e, ++epoch_no) {
      const auto seed = Rng::mix(cfg.seed, 0x10000000ULL + e);
      emit(warmup_epoch(model, data, cfg, g_state, seed), epoch_no);
    }
  }

  const bool any_density = cfg.main_epochs > 0 || cfg.finetune_epochs > 0;
  if (any_density && !actnorms_initialized(model)) {
    // Data-dependent init from the first batch the density phase sees.
    const auto order = shuffled_indices(data.rows(), Rng::mix(cfg.seed, 0x20000000ULL));
    const auto m = std::min<std::int64_t>(cfg.batch_size, data.rows());
    std::vector<Vec> batch;
    batch.reserve(m);
    for (std::int64_t i = 0; i < m; ++i) {
      batch.push_back(project(model, data.row(order[i])).u);
    }
    initialize_actnorms(model, batch);
  }

  {
    AdamState g_state(model.g_param_count());
    AdamState h_state(model.h_param_count());
    for (int e = 0; e < cfg.main_epochs; ++e, ++epoch_no) {
      const auto seed = Rng::mix(cfg.seed, 0x20000000ULL + e);
      if (cfg.regime == TrainConfig::Regime::joint) {
        emit(joint_epoch(model, data, cfg, g_state, h_state, seed), epoch_no);
      } else {
        emit(sequential_epoch(model, data, cfg, h_state, seed), epoch_no);
      }
    }
  }

  {
    AdamState h_state(model.h_param_count());
    for (int e = 0; e < cfg.finetune_epochs; ++e, ++epoch_no) {
      const auto seed = Rng::mix(cfg.seed, 0x30000000ULL + e);
      emit(sequential_epoch(model, data, cfg, h_state, seed), epoch_no);
    }
  }
  return result;
}

}  // namespace cef
