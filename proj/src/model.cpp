#include "hstg/model.hpp"

#include <cmath>

#include "hstg/errors.hpp"
#include "hstg/kernels.hpp"
#include "hstg/rng.hpp"

namespace hstg {

// Coordinate scales keep features well inside the stable region of the
// pinned optimizer settings (lr 0.5, momentum 0.9): body-normalized
// coordinates land in ~[-0.25, 0.25], pixel centers in ~[0, 0.25].
ModelConfig default_low_config() {
  ModelConfig cfg;
  cfg.level = Level::low;
  cfg.coord_scale = 4.0;
  return cfg;
}

ModelConfig default_high_config() {
  ModelConfig cfg;
  cfg.level = Level::high;
  cfg.coord_scale = 16.0;
  return cfg;
}

std::vector<LayerSpec> layer_specs(const ModelConfig& cfg) {
  std::vector<LayerSpec> specs;
  if (cfg.conv_layers <= 0) return specs;
  if (cfg.conv_layers == 1) {
    specs.push_back({cfg.input_frames, 1, false, false});
    return specs;
  }
  specs.push_back({cfg.input_frames, cfg.hidden_channels, true, false});
  for (int l = 1; l < cfg.conv_layers - 1; ++l)
    specs.push_back({cfg.hidden_channels, cfg.hidden_channels, true, true});
  specs.push_back({cfg.hidden_channels, 1, false, false});
  return specs;
}

std::vector<TensorInfo> tensor_layout(const ModelConfig& cfg) {
  std::vector<TensorInfo> layout;
  size_t off = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    size_t sz = 1;
    for (int d : shape) sz *= static_cast<size_t>(d);
    layout.push_back({std::move(name), std::move(shape), off, sz});
    off += sz;
  };
  add("gcn_weight", {cfg.in_channels, cfg.gcn_channels});
  add("gcn_bias", {cfg.gcn_channels});
  add("gcn_prelu", {1});
  const auto specs = layer_specs(cfg);
  for (size_t l = 0; l < specs.size(); ++l) {
    const std::string base = "tconv" + std::to_string(l + 1);
    add(base + "_kernel", {specs[l].out_ch, specs[l].in_ch, 3});
    add(base + "_bias", {specs[l].out_ch});
    if (specs[l].activated) add(base + "_prelu", {1});
  }
  return layout;
}

namespace {

// resolved offsets into the flat parameter vector
struct Offsets {
  size_t gcn_w = 0, gcn_b = 0, gcn_slope = 0;
  struct Layer {
    size_t kernel = 0, bias = 0, slope = 0;
    LayerSpec spec;
  };
  std::vector<Layer> layers;
  size_t total = 0;
};

Offsets resolve_offsets(const ModelConfig& cfg) {
  Offsets off;
  size_t cur = 0;
  off.gcn_w = cur;
  cur += static_cast<size_t>(cfg.in_channels) * cfg.gcn_channels;
  off.gcn_b = cur;
  cur += cfg.gcn_channels;
  off.gcn_slope = cur;
  cur += 1;
  for (const auto& spec : layer_specs(cfg)) {
    Offsets::Layer l;
    l.spec = spec;
    l.kernel = cur;
    cur += static_cast<size_t>(spec.out_ch) * spec.in_ch * 3;
    l.bias = cur;
    cur += spec.out_ch;
    if (spec.activated) {
      l.slope = cur;
      cur += 1;
    }
    off.layers.push_back(l);
  }
  off.total = cur;
  return off;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  ModelParams params;
  params.config = cfg;
  params.seed = seed;
  const Offsets off = resolve_offsets(cfg);
  params.values.assign(off.total, 0.0);
  Rng rng(seed);
  // weights uniform(-r, r) with r = sqrt(1/fan_in); biases start at zero,
  // slopes at 0.25
  const double r_gcn = std::sqrt(1.0 / cfg.in_channels);
  for (size_t i = off.gcn_w; i < off.gcn_b; ++i)
    params.values[i] = rng.uniform(-r_gcn, r_gcn);
  params.values[off.gcn_slope] = 0.25;
  for (const auto& layer : off.layers) {
    const double r = std::sqrt(1.0 / (layer.spec.in_ch * 3));
    for (size_t i = layer.kernel; i < layer.bias; ++i) params.values[i] = rng.uniform(-r, r);
    if (layer.spec.activated) params.values[layer.slope] = 0.25;
  }
  return params;
}

size_t param_count(const ModelParams& params) { return params.values.size(); }

namespace {

struct PredictorCache {
  // per coordinate channel, per layer: input plane and pre-activation plane
  std::vector<std::vector<std::vector<double>>> inputs;  // [channel][layer]
  std::vector<std::vector<std::vector<double>>> pres;
};

struct ForwardCache {
  Tensor scaled;   // (C_in, T, V)
  Tensor mixed;    // (C_in, T, V), adjacency-applied
  Tensor gcn_pre;  // (C_out, T, V)
  Tensor gcn_act;
  PredictorCache pred;
  Tensor out;  // (C_out, 1, V), model coordinates
};

void check_gcn_shapes(const Tensor& features, std::span<const NormalizedAdjacency> adjacency,
                      const ModelConfig& cfg) {
  if (features.channels != cfg.in_channels)
    throw ShapeMismatch("gcn_layer: feature channels != config in_channels");
  if (static_cast<int>(adjacency.size()) != features.frames)
    throw ShapeMismatch("gcn_layer: need one adjacency per time slice");
  for (const auto& adj : adjacency)
    if (adj.m.n != features.nodes)
      throw ShapeMismatch("gcn_layer: adjacency size != node count");
}

// H'_t = PReLU(A_t H_t W + b), caching mixed and pre-activation tensors
Tensor gcn_forward(const Tensor& features, std::span<const NormalizedAdjacency> adjacency,
                   const ModelParams& params, const Offsets& off, ForwardCache* cache) {
  const auto& k = kern::ops();
  const ModelConfig& cfg = params.config;
  const int t_n = features.frames, v_n = features.nodes;
  Tensor mixed(cfg.in_channels, t_n, v_n);
  for (int c = 0; c < cfg.in_channels; ++c)
    for (int t = 0; t < t_n; ++t)
      k.matvec(adjacency[t].m.a.data(), features.slice(c, t), mixed.slice(c, t), v_n);

  const double* w = params.values.data() + off.gcn_w;
  const double* b = params.values.data() + off.gcn_b;
  const double slope = params.values[off.gcn_slope];
  Tensor pre(cfg.gcn_channels, t_n, v_n);
  for (int co = 0; co < cfg.gcn_channels; ++co)
    for (int t = 0; t < t_n; ++t) {
      double* dst = pre.slice(co, t);
      for (int v = 0; v < v_n; ++v) dst[v] = b[co];
      for (int ci = 0; ci < cfg.in_channels; ++ci)
        k.axpy(w[ci * cfg.gcn_channels + co], mixed.slice(ci, t), dst, v_n);
    }
  Tensor act(cfg.gcn_channels, t_n, v_n);
  k.prelu(pre.data.data(), act.data.data(), static_cast<int>(pre.size()), slope);
  if (cache) {
    cache->mixed = std::move(mixed);
    cache->gcn_pre = std::move(pre);
  }
  return act;
}

// temporal stack on one channel plane; planes are layerspec.in_ch rows of V
std::vector<double> predictor_channel_forward(const double* plane, int v_n,
                                              const ModelParams& params, const Offsets& off,
                                              std::vector<std::vector<double>>* inputs,
                                              std::vector<std::vector<double>>* pres) {
  const auto& k = kern::ops();
  std::vector<double> cur(plane, plane + static_cast<size_t>(off.layers.front().spec.in_ch) * v_n);
  for (const auto& layer : off.layers) {
    const auto& spec = layer.spec;
    std::vector<double> pre(static_cast<size_t>(spec.out_ch) * v_n);
    k.conv3(cur.data(), spec.in_ch, v_n, params.values.data() + layer.kernel,
            params.values.data() + layer.bias, pre.data(), spec.out_ch);
    std::vector<double> next;
    if (spec.activated) {
      next.resize(pre.size());
      k.prelu(pre.data(), next.data(), static_cast<int>(pre.size()), params.values[layer.slope]);
      if (spec.residual)
        for (size_t i = 0; i < next.size(); ++i) next[i] += cur[i];
    } else {
      next = pre;
    }
    if (inputs) {
      inputs->push_back(std::move(cur));
      pres->push_back(std::move(pre));
    }
    cur = std::move(next);
  }
  return cur;
}

Tensor predictor_forward(const Tensor& features, const ModelParams& params, const Offsets& off,
                         ForwardCache* cache) {
  const ModelConfig& cfg = params.config;
  if (cfg.conv_layers < 1) throw ShapeMismatch("temporal predictor needs >= 1 layer");
  if (features.channels != cfg.gcn_channels)
    throw ShapeMismatch("temporal_predictor: channel count mismatch");
  if (features.frames != cfg.input_frames)
    throw ShapeMismatch("temporal_predictor: expected " + std::to_string(cfg.input_frames) +
                        " input frames");
  const int v_n = features.nodes;
  Tensor out(cfg.gcn_channels, 1, v_n);
  if (cache) {
    cache->pred.inputs.assign(cfg.gcn_channels, {});
    cache->pred.pres.assign(cfg.gcn_channels, {});
  }
  for (int c = 0; c < cfg.gcn_channels; ++c) {
    auto* inputs = cache ? &cache->pred.inputs[c] : nullptr;
    auto* pres = cache ? &cache->pred.pres[c] : nullptr;
    const auto last = predictor_channel_forward(features.plane(c), v_n, params, off, inputs, pres);
    std::copy(last.begin(), last.end(), out.slice(c, 0));
  }
  return out;
}

std::vector<NormalizedAdjacency> window_adjacency(const WindowSample& window,
                                                  const ModelConfig& cfg) {
  std::vector<NormalizedAdjacency> adj;
  adj.reserve(window.input.frames);
  std::vector<Joint2D> pos(window.input.nodes);
  for (int t = 0; t < window.input.frames; ++t) {
    for (int v = 0; v < window.input.nodes; ++v)
      pos[v] = {window.input.at(0, t, v), window.input.at(1, t, v)};
    SpatialGraph g;
    if (window.level == Level::low) {
      LowLevelPose p;
      if (static_cast<int>(pos.size()) != kJointCount)
        throw ShapeMismatch("low-level window must have 17 nodes");
      std::copy(pos.begin(), pos.end(), p.local.begin());
      p.height = 1.0;
      g = low_level_graph(p, cfg.binary_low_edges);
    } else {
      g = high_level_graph(std::span<const Joint2D>(pos));
    }
    adj.push_back(symmetric_normalize(g));
  }
  return adj;
}

struct ForwardState {
  ForwardCache cache;
  Offsets off;
  Tensor anchor;  // (2, 1, V); zero for the low level
};

// High-level windows enter the net as offsets from each node's last observed
// position. The net is translation-equivariant that way; adjacency and branch
// scores still see absolute pixel centers.
Tensor window_anchor(const WindowSample& window, const ModelConfig& cfg) {
  Tensor anchor(cfg.in_channels, 1, window.input.nodes);
  if (cfg.level == Level::high)
    for (int c = 0; c < cfg.in_channels; ++c)
      for (int v = 0; v < window.input.nodes; ++v)
        anchor.at(c, 0, v) = window.input.at(c, cfg.input_frames - 1, v);
  return anchor;
}

// full forward in model coordinates; `out` is scaled
void forward_impl(const WindowSample& window, const ModelParams& params, ForwardState& st) {
  const ModelConfig& cfg = params.config;
  if (window.level != cfg.level) throw ShapeMismatch("window level != model level");
  if (window.input.channels != cfg.in_channels || window.input.frames != cfg.input_frames)
    throw ShapeMismatch("window input shape mismatch");
  st.off = resolve_offsets(cfg);
  const auto adj = window_adjacency(window, cfg);
  st.anchor = window_anchor(window, cfg);

  Tensor scaled = window.input;
  for (int c = 0; c < cfg.in_channels; ++c)
    for (int t = 0; t < cfg.input_frames; ++t)
      for (int v = 0; v < scaled.nodes; ++v)
        scaled.at(c, t, v) = (scaled.at(c, t, v) - st.anchor.at(c, 0, v)) / cfg.coord_scale;
  st.cache.scaled = scaled;
  const Tensor act = gcn_forward(st.cache.scaled, adj, params, st.off, &st.cache);
  st.cache.gcn_act = act;
  st.cache.out = predictor_forward(act, params, st.off, &st.cache);
}

Tensor scaled_target(const Tensor& target, const Tensor& anchor, double coord_scale) {
  Tensor ts = target;
  for (int c = 0; c < ts.channels; ++c)
    for (int v = 0; v < ts.nodes; ++v)
      ts.at(c, 0, v) = (ts.at(c, 0, v) - anchor.at(c, 0, v)) / coord_scale;
  return ts;
}

double model_space_loss(const ForwardState& st, const Tensor& target, double coord_scale) {
  const Tensor& out = st.cache.out;
  if (out.nodes != target.nodes || out.channels != target.channels)
    throw ShapeMismatch("prediction/target shape mismatch");
  const Tensor ts = scaled_target(target, st.anchor, coord_scale);
  const double ss = kern::ops().sumsq_diff(out.data.data(), ts.data.data(),
                                           static_cast<int>(out.size()));
  return ss / static_cast<double>(out.size());
}

}  // namespace

Tensor gcn_layer(const Tensor& features, std::span<const NormalizedAdjacency> adjacency,
                 const ModelParams& params) {
  check_gcn_shapes(features, adjacency, params.config);
  const Offsets off = resolve_offsets(params.config);
  return gcn_forward(features, adjacency, params, off, nullptr);
}

Tensor temporal_predictor(const Tensor& features, const ModelParams& params) {
  const Offsets off = resolve_offsets(params.config);
  return predictor_forward(features, params, off, nullptr);
}

Tensor model_forward(const WindowSample& window, const ModelParams& params) {
  ForwardState st;
  forward_impl(window, params, st);
  Tensor out = std::move(st.cache.out);
  for (int c = 0; c < out.channels; ++c)
    for (int v = 0; v < out.nodes; ++v)
      out.at(c, 0, v) = out.at(c, 0, v) * params.config.coord_scale + st.anchor.at(c, 0, v);
  return out;
}

double window_loss(const WindowSample& window, const ModelParams& params) {
  ForwardState st;
  forward_impl(window, params, st);
  return model_space_loss(st, window.target, params.config.coord_scale);
}

BackwardResult model_backward(const WindowSample& window, const ModelParams& params) {
  const auto& k = kern::ops();
  const ModelConfig& cfg = params.config;
  ForwardState st;
  forward_impl(window, params, st);
  const Offsets& off = st.off;

  BackwardResult res;
  res.grads.assign(params.values.size(), 0.0);
  res.loss = model_space_loss(st, window.target, cfg.coord_scale);

  const int v_n = window.input.nodes;
  const size_t numel = st.cache.out.size();

  // d loss / d prediction
  Tensor gout(cfg.gcn_channels, 1, v_n);
  {
    const Tensor ts = scaled_target(window.target, st.anchor, cfg.coord_scale);
    for (size_t i = 0; i < numel; ++i)
      gout.data[i] = 2.0 * (st.cache.out.data[i] - ts.data[i]) / static_cast<double>(numel);
  }

  // temporal stack, reversed per coordinate channel
  Tensor g_act(cfg.gcn_channels, cfg.input_frames, v_n);
  for (int c = 0; c < cfg.gcn_channels; ++c) {
    std::vector<double> gcur(gout.slice(c, 0), gout.slice(c, 0) + v_n);
    for (int l = static_cast<int>(off.layers.size()) - 1; l >= 0; --l) {
      const auto& layer = off.layers[l];
      const auto& spec = layer.spec;
      const auto& in_plane = st.cache.pred.inputs[c][l];
      const auto& pre_plane = st.cache.pred.pres[c][l];
      std::vector<double> gpre(pre_plane.size());
      if (spec.activated) {
        const double ds = k.prelu_grad(pre_plane.data(), gcur.data(), gpre.data(),
                                       static_cast<int>(pre_plane.size()),
                                       params.values[layer.slope]);
        res.grads[layer.slope] += ds;
      } else {
        gpre = gcur;
      }
      k.conv3_grad_k(gpre.data(), spec.out_ch, in_plane.data(), spec.in_ch, v_n,
                     res.grads.data() + layer.kernel, res.grads.data() + layer.bias);
      std::vector<double> gin(in_plane.size(), 0.0);
      k.conv3_grad_in(gpre.data(), spec.out_ch, v_n, params.values.data() + layer.kernel,
                      gin.data(), spec.in_ch);
      if (spec.residual)
        for (size_t i = 0; i < gin.size(); ++i) gin[i] += gcur[i];
      gcur = std::move(gin);
    }
    std::copy(gcur.begin(), gcur.end(), g_act.plane(c));
  }

  // gcn layer
  {
    Tensor gpre(cfg.gcn_channels, cfg.input_frames, v_n);
    const double ds = k.prelu_grad(st.cache.gcn_pre.data.data(), g_act.data.data(),
                                   gpre.data.data(), static_cast<int>(gpre.size()),
                                   params.values[off.gcn_slope]);
    res.grads[off.gcn_slope] += ds;
    double* gw = res.grads.data() + off.gcn_w;
    double* gb = res.grads.data() + off.gcn_b;
    for (int co = 0; co < cfg.gcn_channels; ++co)
      for (int t = 0; t < cfg.input_frames; ++t) {
        const double* gp = gpre.slice(co, t);
        double s = 0.0;
        for (int v = 0; v < v_n; ++v) s += gp[v];
        gb[co] += s;
        for (int ci = 0; ci < cfg.in_channels; ++ci) {
          const double* mx = st.cache.mixed.slice(ci, t);
          double acc = 0.0;
          for (int v = 0; v < v_n; ++v) acc += mx[v] * gp[v];
          gw[ci * cfg.gcn_channels + co] += acc;
        }
      }
  }
  return res;
}

}  // namespace hstg
