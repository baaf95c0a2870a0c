#pragma once

#include <array>
#include <span>
#include <utility>

#include "hstg/trajectory.hpp"

namespace hstg {

// Skeleton topology on the 17 COCO keypoints: a 16-edge tree (head, arms,
// legs, torso sides, nose-to-shoulders) plus shoulder-shoulder and hip-hip
// cross links.
inline constexpr std::array<std::pair<int, int>, 18> kSkeletonEdges = {{
    {0, 1}, {0, 2}, {1, 3}, {2, 4},            // head
    {0, 5}, {0, 6},                            // head to shoulders
    {5, 7}, {7, 9}, {6, 8}, {8, 10},           // arms
    {5, 11}, {6, 12},                          // torso sides
    {11, 13}, {13, 15}, {12, 14}, {14, 16},    // legs
    {5, 6}, {11, 12},                          // cross links
}};

/// Per-frame spatial graph with inverse-squared-distance edge weights.
/// The raw adjacency has a zero diagonal; coincident nodes weigh 0.
struct SpatialGraph {
  Level level = Level::low;
  std::vector<Joint2D> positions;
  Mat adjacency;
};

struct NormalizedAdjacency {
  Mat m;
};

/// 17-node skeleton graph over normalized local coordinates. Connected pairs
/// weigh 1/dist^2 (or exactly 1 when binary_edges), everything else 0.
SpatialGraph low_level_graph(const LowLevelPose& pose, bool binary_edges = false);

/// Complete graph over person centers, 1/dist^2 weights.
SpatialGraph high_level_graph(const HighLevelFrame& frame);
SpatialGraph high_level_graph(std::span<const Joint2D> centers);

/// A_hat = A + I, D = diag(row sums), returns D^-1/2 A_hat D^-1/2.
NormalizedAdjacency symmetric_normalize(const SpatialGraph& g);
NormalizedAdjacency symmetric_normalize(const Mat& adjacency);

}  // namespace hstg
