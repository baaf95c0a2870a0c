#pragma once

#include <cstddef>
#include <vector>

namespace hstg {

// Dense (channels, frames, nodes) tensor, row-major with nodes fastest.
// For a fixed channel the frame rows form one contiguous plane, which is the
// layout the convolution kernels consume directly.
struct Tensor {
  int channels = 0;
  int frames = 0;
  int nodes = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int t, int v)
      : channels(c), frames(t), nodes(v), data(static_cast<size_t>(c) * t * v, 0.0) {}

  double& at(int c, int t, int v) {
    return data[(static_cast<size_t>(c) * frames + t) * nodes + v];
  }
  double at(int c, int t, int v) const {
    return data[(static_cast<size_t>(c) * frames + t) * nodes + v];
  }
  double* slice(int c, int t) {
    return data.data() + (static_cast<size_t>(c) * frames + t) * nodes;
  }
  const double* slice(int c, int t) const {
    return data.data() + (static_cast<size_t>(c) * frames + t) * nodes;
  }
  // contiguous frames*nodes plane of one channel
  double* plane(int c) { return slice(c, 0); }
  const double* plane(int c) const { return slice(c, 0); }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const {
    return channels == o.channels && frames == o.frames && nodes == o.nodes;
  }
};

// Square row-major matrix (adjacency-sized, tiny).
struct Mat {
  int n = 0;
  std::vector<double> a;

  Mat() = default;
  explicit Mat(int n_) : n(n_), a(static_cast<size_t>(n_) * n_, 0.0) {}

  double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * n; }
  double* row(int i) { return a.data() + static_cast<size_t>(i) * n; }
};

}  // namespace hstg
