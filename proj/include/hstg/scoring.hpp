#pragma once

#include <array>
#include <span>
#include <vector>

#include "hstg/trainer.hpp"

namespace hstg {

/// Weight triple (sums to 1) plus the per-branch normalization divisors
/// (scene-group training-set means) raw scores are divided by before mixing.
struct BranchWeights {
  std::array<double, 3> w = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::array<double, 3> d = {1.0, 1.0, 1.0};
};

struct ScoreOptions {
  bool l3_absolute = true;     // |pred disp^2 - true disp^2| vs signed max
  bool l1_window_mean = false; // divide L1 by the 4-frame window span
};

/// Raw branch values for one covered frame.
struct FrameBranches {
  int frame_idx = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

struct FrameScore {
  int frame_idx = 0;
  bool covered = false;
  double combined = 0.0;
  double l1 = 0.0, l2 = 0.0, l3 = 0.0;
};

struct ClipScores {
  std::string video_id;
  std::vector<FrameScore> frames;  // one entry per clip frame
};

/// Pose prediction error: per person the MSE over 17x2 low-level features at
/// the target frame; the frame score is the max across persons.
double branch_l1(std::span<const Tensor> pred, std::span<const Tensor> truth,
                 const ScoreOptions& opts = {});

/// Center prediction error: max across persons of the squared distance
/// between predicted and true center at the predicted frame.
double branch_l2(std::span<const Joint2D> pred, std::span<const Joint2D> truth);

/// Motion-vector error between the predicted frame t1 and each observed
/// input frame t2; 0 whenever at most one person is present.
double branch_l3(std::span<const Joint2D> pred_t1, std::span<const Joint2D> true_t1,
                 const Tensor& input_centers, bool absolute = true);

/// W1 (l1/d1) + W2 (l2/d2) + W3 (l3/d3).
double combine_branches(double l1, double l2, double l3, const BranchWeights& bw);

/// Raw branch triples for every covered frame of the clip (frames 4..T-1
/// whose 5-frame window exists at both hierarchy levels).
std::vector<FrameBranches> score_branches(const SceneClip& clip, const Checkpoint& ckpt,
                                          const ScoreOptions& opts = {});

/// Full sliding-window scoring; uncovered frames carry covered=false.
ClipScores score_clip(const SceneClip& clip, const Checkpoint& ckpt,
                      const BranchWeights& weights, const ScoreOptions& opts = {});

}  // namespace hstg
