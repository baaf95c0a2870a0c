#include "hstg/graph.hpp"

#include <cmath>

namespace hstg {

namespace {

double pair_weight(const Joint2D& a, const Joint2D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double d2 = dx * dx + dy * dy;
  return d2 == 0.0 ? 0.0 : 1.0 / d2;
}

}  // namespace

SpatialGraph low_level_graph(const LowLevelPose& pose, bool binary_edges) {
  SpatialGraph g;
  g.level = Level::low;
  g.positions.assign(pose.local.begin(), pose.local.end());
  g.adjacency = Mat(kJointCount);
  for (const auto& [i, j] : kSkeletonEdges) {
    const double w = binary_edges ? 1.0 : pair_weight(g.positions[i], g.positions[j]);
    g.adjacency.at(i, j) = w;
    g.adjacency.at(j, i) = w;
  }
  return g;
}

SpatialGraph high_level_graph(std::span<const Joint2D> centers) {
  SpatialGraph g;
  g.level = Level::high;
  g.positions.assign(centers.begin(), centers.end());
  const int n = static_cast<int>(centers.size());
  g.adjacency = Mat(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double w = pair_weight(centers[i], centers[j]);
      g.adjacency.at(i, j) = w;
      g.adjacency.at(j, i) = w;
    }
  return g;
}

SpatialGraph high_level_graph(const HighLevelFrame& frame) {
  return high_level_graph(std::span<const Joint2D>(frame.centers));
}

NormalizedAdjacency symmetric_normalize(const Mat& adjacency) {
  const int n = adjacency.n;
  NormalizedAdjacency out;
  out.m = Mat(n);
  // self-loops guarantee strictly positive degrees
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    double d = 1.0;
    for (int j = 0; j < n; ++j) d += adjacency.at(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double hat = adjacency.at(i, j) + (i == j ? 1.0 : 0.0);
      out.m.at(i, j) = inv_sqrt_deg[i] * hat * inv_sqrt_deg[j];
    }
  return out;
}

NormalizedAdjacency symmetric_normalize(const SpatialGraph& g) {
  return symmetric_normalize(g.adjacency);
}

}  // namespace hstg
