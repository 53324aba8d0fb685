#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "cef/datasets.hpp"
#include "cef/serialize.hpp"
#include "cef/training.hpp"
#include "cef/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int cmd_train(const std::string& config_path) {
  // Validate everything before touching the filesystem.
  const cef::RunConfig cfg = cef::load_run_config(config_path);
  cef::CefModel model =
      cef::build_model(cfg.architecture, cfg.train.seed, cfg.allow_inversion);
  const cef::Tensor data = cef::load_dataset(cfg.dataset);

  fs::create_directories(cfg.out_dir);
  std::ofstream metrics(fs::path(cfg.out_dir) / "metrics.txt");
  if (!metrics) throw cef::IoError("cannot write metrics in " + cfg.out_dir);

  int last_epoch = -1;
  cef::run_training(model, data, cfg.train, [&](const cef::EpochMetrics& m) {
    metrics << m.line(false) << '\n';
    std::cout << m.line(true) << std::endl;
    last_epoch = m.epoch;
  });
  metrics.close();

  cef::save_checkpoint(model, (fs::path(cfg.out_dir) / "checkpoint.cef").string(),
                       cfg.train.seed, last_epoch + 1);
  std::cout << "checkpoint written to " << (fs::path(cfg.out_dir) / "checkpoint.cef")
            << std::endl;
  return kExitOk;
}

int cmd_sample(const std::string& ckpt_path, std::int64_t count, std::uint64_t seed,
               const std::string& out_path) {
  const cef::Checkpoint ckpt = cef::load_checkpoint(ckpt_path);
  const cef::Tensor samples = cef::sample(ckpt.model, count, seed);
  if (out_path.size() >= 4 && out_path.substr(out_path.size() - 4) == ".csv") {
    cef::save_tensor_csv(samples, out_path);
  } else {
    cef::save_tensor(samples, out_path);
  }
  return kExitOk;
}

int cmd_density(const std::string& ckpt_path, const std::string& grid,
                const std::string& points_path, const std::string& out_path) {
  const cef::Checkpoint ckpt = cef::load_checkpoint(ckpt_path);
  std::ofstream os(out_path);
  if (!os) throw cef::IoError("cannot open for writing: " + out_path);
  os.precision(17);

  auto emit_point = [&](const cef::Vec& x, const std::string& prefix) {
    try {
      const cef::DensityReport rep = cef::log_prob(ckpt.model, x);
      os << prefix;
      for (Eigen::Index j = 0; j < x.size(); ++j) os << x[j] << ',';
      os << rep.log_prob << ',' << rep.reconstruction_sq << ",ok\n";
    } catch (const cef::SingularityError&) {
      os << prefix;
      for (Eigen::Index j = 0; j < x.size(); ++j) os << x[j] << ',';
      os << "nan,nan,singular\n";
    }
  };

  if (!grid.empty()) {
    // phi x theta grid over the sphere for Fig.-style density maps.
    int nphi = 0, ntheta = 0;
    if (std::sscanf(grid.c_str(), "%dx%d", &nphi, &ntheta) != 2 || nphi < 1 || ntheta < 1) {
      std::cerr << "bad grid spec '" << grid << "', expected NPHIxNTHETA" << std::endl;
      return kExitUsage;
    }
    if (ckpt.model.ambient_dim() != 3) {
      std::cerr << "grid mode requires a 3-dimensional ambient space" << std::endl;
      return kExitUsage;
    }
    os << "phi,theta,x0,x1,x2,log_prob,recon_sq,status\n";
    for (int i = 0; i < nphi; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / nphi;
      for (int j = 0; j < ntheta; ++j) {
        const double theta = std::numbers::pi * (j + 0.5) / ntheta;
        cef::Vec x(3);
        x << std::cos(phi) * std::sin(theta), std::sin(phi) * std::sin(theta),
            std::cos(theta);
        std::ostringstream prefix;
        prefix.precision(17);
        prefix << phi << ',' << theta << ',';
        emit_point(x, prefix.str());
      }
    }
    return kExitOk;
  }

  const cef::Tensor pts = cef::load_points(points_path);
  os << "index,";
  for (std::int64_t j = 0; j < (pts.rows() ? pts.row_size() : 0); ++j) os << "x" << j << ',';
  os << "log_prob,recon_sq,status\n";
  for (std::int64_t i = 0; i < pts.rows(); ++i) {
    std::ostringstream prefix;
    prefix << i << ',';
    emit_point(pts.row(i), prefix.str());
  }
  return kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  const auto results = cef::run_verify_suite(suite, seed);
  for (const auto& r : results) std::cout << cef::format_check(r) << std::endl;
  const bool ok = cef::all_pass(results);
  std::cout << (ok ? "all checks passed" : "checks FAILED") << std::endl;
  return ok ? kExitOk : kExitCheckFailure;
}

int cmd_info(const std::string& ckpt_path) {
  const cef::Checkpoint ckpt = cef::load_checkpoint(ckpt_path);
  std::cout << "seed: " << ckpt.seed << "\nepoch: " << ckpt.epoch
            << "\nlatent_dim: " << ckpt.model.latent_dim()
            << "\nambient_dim: " << ckpt.model.ambient_dim()
            << "\ng_params: " << ckpt.model.g_param_count()
            << "\nh_params: " << ckpt.model.h_param_count() << "\narchitecture:\n"
            << ckpt.header.at("arch").dump(2) << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal embedding flows: training, sampling, density export"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_path, points_path, grid, suite = "all";
  std::int64_t count = 1000;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "run a training schedule from a config");
  train->add_option("--config", config_path, "run config (json)")->required();

  auto* sample = app.add_subcommand("sample", "draw samples from a checkpoint");
  sample->add_option("--checkpoint", checkpoint_path)->required();
  sample->add_option("--count", count);
  sample->add_option("--seed", seed);
  sample->add_option("--out", out_path, "output (.csv for text, else binary)")->required();

  auto* density = app.add_subcommand("density", "evaluate log densities");
  density->add_option("--checkpoint", checkpoint_path)->required();
  density->add_option("--grid", grid, "NPHIxNTHETA sphere grid");
  density->add_option("--points", points_path, "points file (binary or csv)");
  density->add_option("--out", out_path)->required();

  auto* verify = app.add_subcommand("verify", "run property-check suites");
  verify->add_option("--suite", suite,
                     "conformality | roundtrip | gradcheck | normalization | all");
  verify->add_option("--seed", seed);

  auto* info = app.add_subcommand("info", "describe a checkpoint");
  info->add_option("--checkpoint", checkpoint_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage/message
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(config_path);
    if (sample->parsed()) return cmd_sample(checkpoint_path, count, seed, out_path);
    if (density->parsed()) {
      if (grid.empty() == points_path.empty()) {
        std::cerr << "density: provide exactly one of --grid or --points" << std::endl;
        return kExitUsage;
      }
      return cmd_density(checkpoint_path, grid, points_path, out_path);
    }
    if (verify->parsed()) return cmd_verify(suite, seed);
    if (info->parsed()) return cmd_info(checkpoint_path);
  } catch (const cef::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const cef::IoError& e) {
    std::cerr << "io error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const cef::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const cef::SingularityError& e) {
    std::cerr << "numeric abort: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const cef::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitNumeric;
  }
  return kExitUsage;
}
