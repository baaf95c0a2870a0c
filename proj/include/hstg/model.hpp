#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hstg/graph.hpp"

namespace hstg {

/// Architecture hyper-parameters. `coord_scale` divides features before the
/// net and multiplies predictions back; the high level defaults to 256 so
/// pixel centers are O(1) inside the net. `binary_low_edges` switches the
/// low-level skeleton adjacency to unweighted edges.
struct ModelConfig {
  Level level = Level::low;
  int in_channels = 2;
  int gcn_channels = 2;
  int input_frames = 4;
  int conv_layers = 5;
  int hidden_channels = 4;
  double coord_scale = 1.0;
  bool binary_low_edges = false;
};

ModelConfig default_low_config();
ModelConfig default_high_config();

struct LayerSpec {
  int in_ch = 0;
  int out_ch = 0;
  bool activated = false;
  bool residual = false;
};

/// Channel plan of the temporal stack: first layer T_in -> hidden with
/// activation, interior layers hidden -> hidden with activation + residual,
/// last layer hidden -> 1 plain.
std::vector<LayerSpec> layer_specs(const ModelConfig& cfg);

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  size_t offset = 0;
  size_t size = 0;
};

/// Flat parameter layout: gcn weight/bias/slope, then per temporal layer
/// kernel/bias[/slope].
std::vector<TensorInfo> tensor_layout(const ModelConfig& cfg);

struct ModelParams {
  ModelConfig config;
  uint64_t seed = 0;
  std::vector<double> values;  // flat, layout per tensor_layout(config)
};

/// Uniform(-r, r) with r = sqrt(1/fan_in); PReLU slopes start at 0.25.
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);

size_t param_count(const ModelParams& params);

inline double prelu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

/// One graph-convolution layer applied per time slice:
/// H'_t = PReLU(A_t H_t W + b). Expects one adjacency per input frame.
Tensor gcn_layer(const Tensor& features, std::span<const NormalizedAdjacency> adjacency,
                 const ModelParams& params);

/// Five-layer temporal stack over (2, T_in, V); time steps act as channels,
/// kernels run along the node axis and are shared by the two coordinate
/// channels. Returns (2, 1, V).
Tensor temporal_predictor(const Tensor& features, const ModelParams& params);

/// gcn_layer then temporal_predictor; builds per-frame adjacencies from the
/// window's own feature frames. Output is in the window's natural units.
Tensor model_forward(const WindowSample& window, const ModelParams& params);

struct BackwardResult {
  double loss = 0.0;            // MSE in model (scaled) coordinates
  std::vector<double> grads;    // same flat layout as ModelParams::values
};

/// Exact reverse-mode gradients of the window MSE w.r.t. every parameter.
BackwardResult model_backward(const WindowSample& window, const ModelParams& params);

/// Forward + MSE only; the finite-difference oracle in the tests uses this.
double window_loss(const WindowSample& window, const ModelParams& params);

}  // namespace hstg
