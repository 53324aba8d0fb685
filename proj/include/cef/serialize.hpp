#pragma once

#include <cstdint>
#include <json.hpp>
#include <memory>
#include <string>

#include "cef/datasets.hpp"
#include "cef/flow.hpp"
#include "cef/training.hpp"

namespace cef {

// Dataset container: 8-byte magic, little-endian int64 rank and extents,
// then the float64 buffer.
inline constexpr char kTensorMagic[8] = {'C', 'E', 'F', 'D', 'A', 'T', 'A', '1'};

void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);
void save_tensor_csv(const Tensor& t, const std::string& path);

// Reads either container format by sniffing the magic.
Tensor load_points(const std::string& path);

// --- Architecture ------------------------------------------------------------

// Blocks are data: a config lists block specs and the factory assembles
// the model. Fresh parameters are initialized deterministically from
// init_seed. The inversion layer must be enabled explicitly.
CefModel build_model(const nlohmann::json& arch, std::uint64_t init_seed,
                     bool allow_inversion = false);
nlohmann::json model_arch(const CefModel& model);

// --- Checkpoints ---------------------------------------------------------------

// Self-describing container: 8-byte magic, little-endian header length,
// JSON header (format version, seed, epoch, architecture, parameter
// counts), then raw float64 parameter payloads for g and h.
inline constexpr char kCheckpointMagic[8] = {'C', 'E', 'F', 'C', 'K', 'P', 'T', '1'};

void save_checkpoint(const CefModel& model, const std::string& path,
                     std::uint64_t seed, int epoch);

struct Checkpoint {
  CefModel model;
  std::uint64_t seed = 0;
  int epoch = 0;
  nlohmann::json header;
};

Checkpoint load_checkpoint(const std::string& path);

// --- Run configuration -----------------------------------------------------------

struct DatasetSpec {
  enum class Kind { sphere, file };
  Kind kind = Kind::sphere;
  SphereDatasetConfig sphere;
  std::string path;
};

struct RunConfig {
  DatasetSpec dataset;
  nlohmann::json architecture;
  TrainConfig train;
  std::string out_dir;
  bool allow_inversion = false;
};

// Strict parse: unknown keys are rejected at every level and block
// dimensions are chain-checked by building the model, so a bad config
// never reaches mid-training.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

Tensor load_dataset(const DatasetSpec& spec);

}  // namespace cef
