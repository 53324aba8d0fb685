#include "cef/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "cef/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace cef {

using nlohmann::json;

namespace {

void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw IoError("unexpected end of file");
}

void require_keys(const json& obj, const std::string& ctx,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      throw ConfigError(ctx + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get_required(const json& obj, const std::string& ctx, const char* key) {
  if (!obj.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": bad value for '" + key + "'");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& ctx, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": bad value for '" + key + "'");
  }
}

}  // namespace

void save_tensor(const Tensor& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_bytes(os, kTensorMagic, 8);
  const std::int64_t rank = t.ndim();
  write_bytes(os, &rank, 8);
  for (auto s : t.shape) write_bytes(os, &s, 8);
  write_bytes(os, t.data.data(), sizeof(double) * static_cast<std::size_t>(t.size()));
  if (!os) throw IoError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[8];
  read_bytes(is, magic, 8);
  if (std::memcmp(magic, kTensorMagic, 8) != 0) {
    throw IoError("not a dataset file: " + path);
  }
  std::int64_t rank = 0;
  read_bytes(is, &rank, 8);
  if (rank < 1 || rank > 8) throw IoError("bad tensor rank in " + path);
  std::vector<std::int64_t> shape(rank);
  for (auto& s : shape) read_bytes(is, &s, 8);
  Tensor t = Tensor::zeros(shape);
  read_bytes(is, t.data.data(), sizeof(double) * static_cast<std::size_t>(t.size()));
  t.validate();
  return t;
}

void save_tensor_csv(const Tensor& t, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.precision(17);
  const auto cols = t.ndim() >= 2 ? t.row_size() : 1;
  const auto rows = t.ndim() >= 2 ? t.rows() : t.size();
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) {
      if (j) os << ',';
      os << t.data[i * cols + j];
    }
    os << '\n';
  }
}

Tensor load_points(const std::string& path) {
  {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[8] = {};
    is.read(magic, 8);
    if (is && std::memcmp(magic, kTensorMagic, 8) == 0) return load_tensor(path);
  }
  // CSV fallback: one point per line.
  std::ifstream is(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("ragged csv: " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    return Tensor{{0, 0}, Vec(0)};
  }
  Tensor t = Tensor::zeros({static_cast<std::int64_t>(rows.size()),
                            static_cast<std::int64_t>(rows.front().size())});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      t.data[static_cast<std::int64_t>(i * rows.front().size() + j)] = rows[i][j];
    }
  }
  return t;
}

// --- Architecture ------------------------------------------------------------------

namespace {

OrthogonalParam parse_ortho_param(const json& spec, const std::string& ctx, int dim,
                                  Rng& init_rng) {
  const auto kind = get_or<std::string>(spec, ctx, "param", "skew");
  std::string init = get_or<std::string>(spec, ctx, "init", "");
  if (kind == "skew") {
    OrthogonalParam q(OrthogonalParam::Kind::skew, dim);
    if (init.empty()) init = "identity";
    if (init == "random") q.init_random(init_rng);
    else if (init != "identity") throw ConfigError(ctx + ": bad init '" + init + "'");
    return q;
  }
  if (kind == "householder") {
    const int refl = get_or<int>(spec, ctx, "reflections", dim);
    if (refl < 1) throw ConfigError(ctx + ": reflections must be >= 1");
    OrthogonalParam q(OrthogonalParam::Kind::householder, dim, refl);
    // Near-zero reflections are frozen at the identity, so random is the
    // useful default for a trainable stack.
    if (init.empty()) init = "random";
    if (init == "random") q.init_random(init_rng);
    else if (init != "identity") throw ConfigError(ctx + ": bad init '" + init + "'");
    return q;
  }
  throw ConfigError(ctx + ": unknown orthogonal parameterization '" + kind + "'");
}

std::unique_ptr<ConformalBlock> build_conformal_block(const json& spec, Rng& init_rng,
                                                      bool allow_inversion) {
  const auto type = get_required<std::string>(spec, "g block", "type");
  const std::string ctx = "g block '" + type + "'";
  if (type == "translation") {
    require_keys(spec, ctx, {"type", "dim"});
    return std::make_unique<TranslationBlock>(get_required<int>(spec, ctx, "dim"));
  }
  if (type == "scaling") {
    require_keys(spec, ctx, {"type", "dim"});
    return std::make_unique<ScalingBlock>(get_required<int>(spec, ctx, "dim"));
  }
  if (type == "sct") {
    require_keys(spec, ctx, {"type", "dim"});
    return std::make_unique<SctBlock>(get_required<int>(spec, ctx, "dim"));
  }
  if (type == "inversion") {
    require_keys(spec, ctx, {"type", "dim"});
    if (!allow_inversion) {
      throw ConfigError(ctx + ": unstable layer; set allow_inversion to use it");
    }
    return std::make_unique<InversionBlock>(get_required<int>(spec, ctx, "dim"));
  }
  if (type == "pad") {
    require_keys(spec, ctx, {"type", "in", "out"});
    return std::make_unique<PadBlock>(get_required<int>(spec, ctx, "in"),
                                      get_required<int>(spec, ctx, "out"));
  }
  if (type == "orthogonal") {
    require_keys(spec, ctx, {"type", "dim", "param", "reflections", "init"});
    const int dim = get_required<int>(spec, ctx, "dim");
    return std::make_unique<OrthogonalBlock>(parse_ortho_param(spec, ctx, dim, init_rng));
  }
  if (type == "conformal_relu") {
    require_keys(spec, ctx, {"type", "dim", "param", "reflections", "init"});
    const int dim = get_required<int>(spec, ctx, "dim");
    return std::make_unique<ConformalReluBlock>(parse_ortho_param(spec, ctx, dim, init_rng));
  }
  if (type == "conditional_orthogonal") {
    require_keys(spec, ctx, {"type", "channels", "spatial", "q1", "q2"});
    const int channels = get_required<int>(spec, ctx, "channels");
    const int spatial = get_or<int>(spec, ctx, "spatial", 1);
    json q1 = spec.contains("q1") ? spec.at("q1") : json::object();
    json q2 = spec.contains("q2") ? spec.at("q2") : json::object();
    require_keys(q1, ctx + ".q1", {"param", "reflections", "init"});
    require_keys(q2, ctx + ".q2", {"param", "reflections", "init"});
    return std::make_unique<ConditionalOrthogonalBlock>(
        spatial, parse_ortho_param(q1, ctx + ".q1", channels, init_rng),
        parse_ortho_param(q2, ctx + ".q2", channels, init_rng));
  }
  if (type == "ortho_conv") {
    require_keys(spec, ctx,
                 {"type", "channels", "height", "width", "k", "param", "reflections", "init"});
    const int c = get_required<int>(spec, ctx, "channels");
    const int h = get_required<int>(spec, ctx, "height");
    const int w = get_required<int>(spec, ctx, "width");
    const int k = get_required<int>(spec, ctx, "k");
    return std::make_unique<OrthoConvBlock>(
        c, h, w, k, parse_ortho_param(spec, ctx, k * k * c, init_rng));
  }
  if (type == "stereographic") {
    require_keys(spec, ctx, {"type", "radius"});
    return std::make_unique<StereographicBlock>(get_or<double>(spec, ctx, "radius", 1.0));
  }
  throw ConfigError("unknown g block type '" + type + "'");
}

std::unique_ptr<BijectiveBlock> build_bijective_block(const json& spec, Rng& init_rng) {
  const auto type = get_required<std::string>(spec, "h block", "type");
  const std::string ctx = "h block '" + type + "'";
  if (type == "actnorm") {
    require_keys(spec, ctx, {"type", "channels", "spatial", "initialized"});
    return std::make_unique<ActNormBlock>(get_required<int>(spec, ctx, "channels"),
                                          get_or<int>(spec, ctx, "spatial", 1),
                                          get_or<bool>(spec, ctx, "initialized", false));
  }
  if (type == "inv_conv1x1") {
    require_keys(spec, ctx, {"type", "channels", "spatial", "perm", "diag_sign"});
    const int c = get_required<int>(spec, ctx, "channels");
    const int spatial = get_or<int>(spec, ctx, "spatial", 1);
    if (spec.contains("perm")) {
      // Structural fields from a checkpoint; parameters arrive separately.
      PluMatrix w = PluMatrix::identity(c);
      w.perm = get_required<std::vector<int>>(spec, ctx, "perm");
      w.diag_sign = get_required<std::vector<int>>(spec, ctx, "diag_sign");
      if (static_cast<int>(w.perm.size()) != c ||
          static_cast<int>(w.diag_sign.size()) != c) {
        throw ConfigError(ctx + ": bad perm/diag_sign length");
      }
      w.rebuild();
      return std::make_unique<InvConv1x1Block>(std::move(w), spatial);
    }
    return std::make_unique<InvConv1x1Block>(PluMatrix::random_rotation(c, init_rng),
                                             spatial);
  }
  if (type == "affine_coupling") {
    require_keys(spec, ctx, {"type", "dim", "hidden", "parity"});
    const int dim = get_required<int>(spec, ctx, "dim");
    const int hidden = get_or<int>(spec, ctx, "hidden", 64);
    const int parity = get_or<int>(spec, ctx, "parity", 0);
    auto block = std::make_unique<AffineCouplingBlock>(dim, hidden, parity);
    block->net().init_random(init_rng);
    return block;
  }
  throw ConfigError("unknown h block type '" + type + "'");
}

}  // namespace

CefModel build_model(const json& arch, std::uint64_t init_seed, bool allow_inversion) {
  require_keys(arch, "architecture", {"g", "h"});
  Rng init_rng(init_seed);
  CefModel model;
  if (arch.contains("g")) {
    if (!arch.at("g").is_array()) throw ConfigError("architecture: 'g' must be a list");
    for (const auto& spec : arch.at("g")) {
      model.g_blocks.push_back(build_conformal_block(spec, init_rng, allow_inversion));
    }
  }
  if (arch.contains("h")) {
    if (!arch.at("h").is_array()) throw ConfigError("architecture: 'h' must be a list");
    for (const auto& spec : arch.at("h")) {
      model.h_blocks.push_back(build_bijective_block(spec, init_rng));
    }
  }
  model.validate();
  return model;
}

json model_arch(const CefModel& model) {
  json g = json::array();
  for (const auto& b : model.g_blocks) g.push_back(b->spec());
  json h = json::array();
  for (const auto& b : model.h_blocks) h.push_back(b->spec());
  return {{"g", g}, {"h", h}};
}

// --- Checkpoints -----------------------------------------------------------------------

void save_checkpoint(const CefModel& model, const std::string& path, std::uint64_t seed,
                     int epoch) {
  json header;
  header["format_version"] = 1;
  header["seed"] = seed;
  header["epoch"] = epoch;
  header["arch"] = model_arch(model);
  header["g_param_count"] = model.g_param_count();
  header["h_param_count"] = model.h_param_count();
  header["optimizer"] = nullptr;
  const std::string head = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_bytes(os, kCheckpointMagic, 8);
  const std::uint64_t head_len = head.size();
  write_bytes(os, &head_len, 8);
  write_bytes(os, head.data(), head.size());
  const Vec gp = model.get_g_params();
  const Vec hp = model.get_h_params();
  write_bytes(os, gp.data(), sizeof(double) * static_cast<std::size_t>(gp.size()));
  write_bytes(os, hp.data(), sizeof(double) * static_cast<std::size_t>(hp.size()));
  if (!os) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[8];
  read_bytes(is, magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  std::uint64_t head_len = 0;
  read_bytes(is, &head_len, 8);
  if (head_len > (1ULL << 30)) throw IoError("oversized checkpoint header");
  std::string head(head_len, '\0');
  read_bytes(is, head.data(), head_len);
  json header = json::parse(head, nullptr, false);
  if (header.is_discarded()) throw IoError("corrupt checkpoint header");
  if (get_or<int>(header, "checkpoint", "format_version", -1) != 1) {
    throw ConfigError("unsupported checkpoint format version");
  }

  Checkpoint ckpt;
  ckpt.header = header;
  ckpt.seed = get_or<std::uint64_t>(header, "checkpoint", "seed", 0);
  ckpt.epoch = get_or<int>(header, "checkpoint", "epoch", 0);
  // Inversion blocks round-trip through checkpoints freely; the gate
  // applies to fresh configs.
  ckpt.model = build_model(header.at("arch"), /*init_seed=*/0, /*allow_inversion=*/true);

  const auto gn = get_required<int>(header, "checkpoint", "g_param_count");
  const auto hn = get_required<int>(header, "checkpoint", "h_param_count");
  if (gn != ckpt.model.g_param_count() || hn != ckpt.model.h_param_count()) {
    throw ConfigError("checkpoint parameter counts do not match the architecture");
  }
  Vec gp(gn), hp(hn);
  read_bytes(is, gp.data(), sizeof(double) * static_cast<std::size_t>(gn));
  read_bytes(is, hp.data(), sizeof(double) * static_cast<std::size_t>(hn));
  ckpt.model.set_g_params(gp);
  ckpt.model.set_h_params(hp);
  return ckpt;
}

// --- Run configuration --------------------------------------------------------------------

RunConfig parse_run_config(const json& doc) {
  require_keys(doc, "config", {"dataset", "architecture", "train", "out_dir", "allow_inversion"});
  RunConfig cfg;
  cfg.allow_inversion = get_or<bool>(doc, "config", "allow_inversion", false);

  const json& ds = doc.contains("dataset") ? doc.at("dataset") : json::object();
  const auto kind = get_or<std::string>(ds, "dataset", "type", "sphere");
  if (kind == "sphere") {
    require_keys(ds, "dataset", {"type", "mu", "count", "seed"});
    cfg.dataset.kind = DatasetSpec::Kind::sphere;
    if (ds.contains("mu")) {
      const auto mu = get_required<std::vector<double>>(ds, "dataset", "mu");
      if (mu.size() != 3) throw ConfigError("dataset: mu must have 3 entries");
      cfg.dataset.sphere.mu = Eigen::Map<const Vec>(mu.data(), 3);
    }
    cfg.dataset.sphere.count = get_or<std::int64_t>(ds, "dataset", "count", 1000);
    cfg.dataset.sphere.seed = get_or<std::uint64_t>(ds, "dataset", "seed", 0);
  } else if (kind == "file") {
    require_keys(ds, "dataset", {"type", "path"});
    cfg.dataset.kind = DatasetSpec::Kind::file;
    cfg.dataset.path = get_required<std::string>(ds, "dataset", "path");
  } else {
    throw ConfigError("dataset: unknown type '" + kind + "'");
  }

  if (!doc.contains("architecture")) throw ConfigError("config: missing architecture");
  cfg.architecture = doc.at("architecture");

  const json& tr = doc.contains("train") ? doc.at("train") : json::object();
  require_keys(tr, "train",
               {"warmup_epochs", "main_epochs", "finetune_epochs", "alpha", "beta_ll",
                "learning_rate", "batch_size", "seed", "regime"});
  cfg.train.warmup_epochs = get_or<int>(tr, "train", "warmup_epochs", 100);
  cfg.train.main_epochs = get_or<int>(tr, "train", "main_epochs", 100);
  cfg.train.finetune_epochs = get_or<int>(tr, "train", "finetune_epochs", 100);
  cfg.train.alpha = get_or<double>(tr, "train", "alpha", 100.0);
  cfg.train.beta_ll = get_or<double>(tr, "train", "beta_ll", 0.001);
  cfg.train.learning_rate = get_or<double>(tr, "train", "learning_rate", 1e-3);
  cfg.train.batch_size = get_or<int>(tr, "train", "batch_size", 100);
  cfg.train.seed = get_or<std::uint64_t>(tr, "train", "seed", 0);
  const auto regime = get_or<std::string>(tr, "train", "regime", "joint");
  if (regime == "joint") {
    cfg.train.regime = TrainConfig::Regime::joint;
  } else if (regime == "sequential") {
    cfg.train.regime = TrainConfig::Regime::sequential;
  } else {
    throw ConfigError("train: unknown regime '" + regime + "'");
  }
  cfg.train.validate();

  cfg.out_dir = get_or<std::string>(doc, "config", "out_dir", "run_out");

  // Chain-check dimensions now; never mid-training.
  CefModel probe = build_model(cfg.architecture, cfg.train.seed, cfg.allow_inversion);
  (void)probe;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  json doc = json::parse(is, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config is not valid json: " + path);
  return parse_run_config(doc);
}

Tensor load_dataset(const DatasetSpec& spec) {
  if (spec.kind == DatasetSpec::Kind::sphere) {
    return sample_sphere_dataset(spec.sphere);
  }
  Tensor t = load_points(spec.path);
  t.validate();
  return t;
}

}  // namespace cef
