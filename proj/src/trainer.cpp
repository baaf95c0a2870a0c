#include "hstg/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "hstg/errors.hpp"
#include "hstg/kernels.hpp"
#include "hstg/rng.hpp"

namespace hstg {

double mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) throw ShapeMismatch("mse_loss: shape mismatch");
  if (pred.size() == 0) throw ShapeMismatch("mse_loss: empty tensors");
  const double ss = kern::ops().sumsq_diff(pred.data.data(), target.data.data(),
                                           static_cast<int>(pred.size()));
  return ss / static_cast<double>(pred.size());
}

double mse_loss(std::span<const Tensor> preds, std::span<const Tensor> targets) {
  if (preds.size() != targets.size() || preds.empty())
    throw ShapeMismatch("mse_loss: batch size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) total += mse_loss(preds[i], targets[i]);
  return total / static_cast<double>(preds.size());
}

double cosine_lr(int epoch, int total_epochs, double lr_max, double lr_min) {
  const double phase = 3.14159265358979323846 * epoch / total_epochs;
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, double beta) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw ShapeMismatch("sgd_step: size mismatch");
  kern::ops().momentum_step(params.data(), velocity.data(), grads.data(), beta, lr,
                            static_cast<int>(params.size()));
}

namespace {

// one level's training loop; returns per-epoch mean loss
std::vector<double> train_level(std::span<const WindowSample> windows, ModelParams& params,
                                const TrainConfig& cfg, uint64_t shuffle_seed) {
  Rng rng(shuffle_seed);
  std::vector<double> velocity(params.values.size(), 0.0);
  std::vector<double> batch_grads(params.values.size(), 0.0);
  std::vector<size_t> order(windows.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<double> epoch_losses;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max, cfg.lr_min);
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(batch_grads.begin(), batch_grads.end(), 0.0);
      double batch_loss = 0.0;
      for (size_t i = start; i < end; ++i) {
        const BackwardResult res = model_backward(windows[order[i]], params);
        kern::ops().axpy(1.0, res.grads.data(), batch_grads.data(),
                         static_cast<int>(batch_grads.size()));
        batch_loss += res.loss;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : batch_grads) g *= inv;
      loss_sum += batch_loss;
      sgd_step(params.values, batch_grads, velocity, lr, cfg.momentum);
    }
    const double mean_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    epoch_losses.push_back(mean_loss);
  }
  return epoch_losses;
}

}  // namespace

TrainResult train(std::span<const WindowSample> low_windows,
                  std::span<const WindowSample> high_windows,
                  const ModelConfig& low_cfg, const ModelConfig& high_cfg,
                  const TrainConfig& cfg, const std::string& group_id) {
  if (low_windows.empty() || high_windows.empty())
    throw EmptyDataset("train: empty window set for group " + group_id);
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw InvalidConfig("train: bad batch/epochs");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw InvalidConfig("train: bad momentum");
  if (!(cfg.lr_max > 0.0)) throw InvalidConfig("train: bad lr_max");

  Rng master(cfg.seed);
  const uint64_t init_low = master.next_u64();
  const uint64_t init_high = master.next_u64();
  const uint64_t shuf_low = master.next_u64();
  const uint64_t shuf_high = master.next_u64();

  TrainResult out;
  out.checkpoint.group_id = group_id;
  out.checkpoint.train_config = cfg;
  out.checkpoint.low = init_params(low_cfg, init_low);
  out.checkpoint.high = init_params(high_cfg, init_high);

  const auto losses_low = train_level(low_windows, out.checkpoint.low, cfg, shuf_low);
  const auto losses_high = train_level(high_windows, out.checkpoint.high, cfg, shuf_high);

  out.checkpoint.final_loss_low = losses_low.back();
  out.checkpoint.final_loss_high = losses_high.back();
  for (int e = 0; e < cfg.epochs; ++e)
    out.history.push_back({e, cosine_lr(e, cfg.epochs, cfg.lr_max, cfg.lr_min),
                           losses_low[e], losses_high[e]});
  return out;
}

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_model(std::ostream& os, const std::string& prefix, const ModelParams& p) {
  const ModelConfig& c = p.config;
  os << prefix << ".level " << to_string(c.level) << "\n";
  os << prefix << ".in_channels " << c.in_channels << "\n";
  os << prefix << ".gcn_channels " << c.gcn_channels << "\n";
  os << prefix << ".input_frames " << c.input_frames << "\n";
  os << prefix << ".conv_layers " << c.conv_layers << "\n";
  os << prefix << ".hidden_channels " << c.hidden_channels << "\n";
  os << prefix << ".coord_scale " << fmt17(c.coord_scale) << "\n";
  os << prefix << ".binary_low_edges " << (c.binary_low_edges ? 1 : 0) << "\n";
  os << prefix << ".seed " << p.seed << "\n";
}

void write_tensors(std::ostream& os, const std::string& prefix, const ModelParams& p) {
  for (const auto& info : tensor_layout(p.config)) {
    os << "tensor " << prefix << "." << info.name << " " << info.shape.size();
    for (int d : info.shape) os << " " << d;
    os << "\n";
    const int row = info.shape.empty() ? 1 : info.shape.back();
    for (size_t i = 0; i < info.size; ++i) {
      os << fmt17(p.values[info.offset + i]);
      os << (((i + 1) % row == 0) ? "\n" : " ");
    }
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os << "HSTGCNN-CKPT v1\n";
  os << "group_id " << ckpt.group_id << "\n";
  os << "batch_size " << ckpt.train_config.batch_size << "\n";
  os << "epochs " << ckpt.train_config.epochs << "\n";
  os << "lr_max " << fmt17(ckpt.train_config.lr_max) << "\n";
  os << "lr_min " << fmt17(ckpt.train_config.lr_min) << "\n";
  os << "momentum " << fmt17(ckpt.train_config.momentum) << "\n";
  os << "seed " << ckpt.train_config.seed << "\n";
  os << "final_loss_low " << fmt17(ckpt.final_loss_low) << "\n";
  os << "final_loss_high " << fmt17(ckpt.final_loss_high) << "\n";
  write_model(os, "low", ckpt.low);
  write_model(os, "high", ckpt.high);
  write_tensors(os, "low", ckpt.low);
  write_tensors(os, "high", ckpt.high);
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

namespace {

ModelConfig parse_model_config(const std::map<std::string, std::string>& meta,
                               const std::string& prefix, uint64_t* seed) {
  ModelConfig cfg;
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(prefix + "." + key);
    if (it == meta.end()) throw FormatError("checkpoint missing key " + prefix + "." + key);
    return it->second;
  };
  cfg.level = level_from_string(get("level"));
  cfg.in_channels = std::stoi(get("in_channels"));
  cfg.gcn_channels = std::stoi(get("gcn_channels"));
  cfg.input_frames = std::stoi(get("input_frames"));
  cfg.conv_layers = std::stoi(get("conv_layers"));
  cfg.hidden_channels = std::stoi(get("hidden_channels"));
  cfg.coord_scale = std::stod(get("coord_scale"));
  cfg.binary_low_edges = std::stoi(get("binary_low_edges")) != 0;
  *seed = std::stoull(get("seed"));
  return cfg;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "HSTGCNN-CKPT v1")
    throw FormatError("bad checkpoint header: " + line);

  std::map<std::string, std::string> meta;
  std::string pending;  // first tensor line
  while (std::getline(is, line)) {
    if (line.rfind("tensor ", 0) == 0) {
      pending = line;
      break;
    }
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw FormatError("bad metadata line: " + line);
    meta[line.substr(0, sp)] = line.substr(sp + 1);
  }
  if (pending.empty()) throw FormatError("checkpoint has no tensor blocks");

  Checkpoint ckpt;
  try {
    auto get = [&](const char* key) -> const std::string& {
      auto it = meta.find(key);
      if (it == meta.end()) throw FormatError(std::string("checkpoint missing key ") + key);
      return it->second;
    };
    ckpt.group_id = get("group_id");
    ckpt.train_config.batch_size = std::stoi(get("batch_size"));
    ckpt.train_config.epochs = std::stoi(get("epochs"));
    ckpt.train_config.lr_max = std::stod(get("lr_max"));
    ckpt.train_config.lr_min = std::stod(get("lr_min"));
    ckpt.train_config.momentum = std::stod(get("momentum"));
    ckpt.train_config.seed = std::stoull(get("seed"));
    ckpt.final_loss_low = std::stod(get("final_loss_low"));
    ckpt.final_loss_high = std::stod(get("final_loss_high"));
    ckpt.low.config = parse_model_config(meta, "low", &ckpt.low.seed);
    ckpt.high.config = parse_model_config(meta, "high", &ckpt.high.seed);
  } catch (const std::invalid_argument&) {
    throw FormatError("malformed checkpoint metadata");
  } catch (const std::out_of_range&) {
    throw FormatError("malformed checkpoint metadata");
  }

  auto total_size = [](const ModelConfig& cfg) {
    size_t n = 0;
    for (const auto& info : tensor_layout(cfg)) n += info.size;
    return n;
  };
  ckpt.low.values.assign(total_size(ckpt.low.config), 0.0);
  ckpt.high.values.assign(total_size(ckpt.high.config), 0.0);

  auto read_block = [&](const std::string& header) -> std::string {
    std::istringstream hs(header);
    std::string tag, name;
    size_t ndim = 0;
    hs >> tag >> name >> ndim;
    if (!hs || tag != "tensor") throw FormatError("bad tensor header: " + header);
    std::vector<int> shape(ndim);
    size_t count = 1;
    for (size_t d = 0; d < ndim; ++d) {
      hs >> shape[d];
      if (!hs || shape[d] <= 0) throw FormatError("bad tensor shape: " + header);
      count *= static_cast<size_t>(shape[d]);
    }
    const auto dot = name.find('.');
    if (dot == std::string::npos) throw FormatError("bad tensor name: " + name);
    ModelParams& target = name.substr(0, dot) == "low" ? ckpt.low : ckpt.high;
    const std::string tname = name.substr(dot + 1);
    for (const auto& info : tensor_layout(target.config)) {
      if (info.name != tname) continue;
      if (info.shape != shape || info.size != count)
        throw FormatError("tensor shape mismatch for " + name);
      for (size_t i = 0; i < count; ++i)
        if (!(is >> target.values[info.offset + i]))
          throw FormatError("truncated tensor data for " + name);
      return name;
    }
    throw FormatError("unknown tensor " + name);
  };

  size_t blocks = 0;
  std::string header = pending;
  while (true) {
    read_block(header);
    ++blocks;
    header.clear();
    while (std::getline(is, header)) {
      if (header.empty()) continue;
      if (header.rfind("tensor ", 0) != 0) throw FormatError("unexpected line: " + header);
      break;
    }
    if (header.empty()) break;
  }
  const size_t expected =
      tensor_layout(ckpt.low.config).size() + tensor_layout(ckpt.high.config).size();
  if (blocks != expected) throw FormatError("checkpoint truncated: missing tensor blocks");
  return ckpt;
}

}  // namespace hstg
