#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cef/flow.hpp"
#include "cef/tensor.hpp"

namespace cef {

struct TrainConfig {
  int warmup_epochs = 100;
  int main_epochs = 100;
  int finetune_epochs = 100;
  double alpha = 100.0;    // reconstruction weight in the mixed loss
  double beta_ll = 0.001;  // likelihood weight in the mixed loss
  double learning_rate = 1e-3;
  int batch_size = 100;
  std::uint64_t seed = 0;
  enum class Regime { sequential, joint };
  Regime regime = Regime::joint;

  void validate() const;
};

struct AdamState {
  Vec m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamState(Eigen::Index n) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
};

// Standard Adam update with bias correction; throws NumericError on
// non-finite gradients.
void adam_step(AdamState& state, Vec& params, const Vec& grads, double lr);

// Updates are clipped at this global gradient norm; early SCT curvature
// otherwise produces occasional huge steps.
inline constexpr double kGradClipNorm = 100.0;

struct EpochMetrics {
  int epoch = 0;
  std::string phase;
  double nll = 0.0;
  double recon = 0.0;
  double total = 0.0;
  double wall_ms = 0.0;

  // Machine-parseable stream line. Wall time is excluded from persisted
  // metrics so identical runs produce identical files.
  std::string line(bool with_wall) const;
};

// Sum of per-sample losses and gradients over a set of rows, evaluated at
// the current parameters. total = beta_ll * nll + alpha * recon per
// sample. Gradients are computed only for the requested sections; the
// density path is skipped entirely when with_density is false (warmup
// must not touch an uninitialized stump).
struct BatchGrads {
  Vec g_grad, h_grad;
  double nll_sum = 0.0;
  double recon_sum = 0.0;
  std::int64_t count = 0;
};

BatchGrads batch_gradients(const CefModel& model, const Tensor& data,
                           const std::vector<std::int64_t>& rows, double beta_ll,
                           double alpha, bool need_g, bool need_h, bool with_density);

// Mean of beta_ll * nll + alpha * recon over the rows; no gradients.
double batch_loss_value(const CefModel& model, const Tensor& data,
                        const std::vector<std::int64_t>& rows, double beta_ll,
                        double alpha, bool with_density);

// One pass over the data in shuffled order. Each function owns one phase
// of the schedule; the shuffle seed must be unique per (phase, epoch).
EpochMetrics warmup_epoch(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                          AdamState& g_state, std::uint64_t shuffle_seed);
EpochMetrics sequential_epoch(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                              AdamState& h_state, std::uint64_t shuffle_seed);
EpochMetrics joint_epoch(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                         AdamState& g_state, AdamState& h_state, std::uint64_t shuffle_seed);

// Full schedule: warmup (reconstruction, g only), main (regime), finetune
// (g fixed). ActNorms are initialized from the first batch of the first
// density phase. Epoch numbering is global across phases.
struct TrainResult {
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

TrainResult run_training(CefModel& model, const Tensor& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

// Thread cap: min(hardware, CEF_THREADS when set). Batch work is split
// into fixed-size chunks reduced in index order, so results do not depend
// on the thread count.
int thread_count();

}  // namespace cef
