#include "hstg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hstg/errors.hpp"

namespace hstg {

double branch_l1(std::span<const Tensor> pred, std::span<const Tensor> truth,
                 const ScoreOptions& opts) {
  if (pred.empty() || pred.size() != truth.size())
    throw NoCoverage("branch_l1: no predictions for frame");
  double worst = 0.0;
  for (size_t p = 0; p < pred.size(); ++p) {
    if (!pred[p].same_shape(truth[p])) throw ShapeMismatch("branch_l1: shape mismatch");
    double ss = 0.0;
    for (size_t i = 0; i < pred[p].size(); ++i) {
      const double d = pred[p].data[i] - truth[p].data[i];
      ss += d * d;
    }
    double mse = ss / static_cast<double>(pred[p].size());
    if (opts.l1_window_mean) mse /= kWindowLen - 1;
    worst = std::max(worst, mse);
  }
  return worst;
}

double branch_l2(std::span<const Joint2D> pred, std::span<const Joint2D> truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw NoCoverage("branch_l2: no predictions for frame");
  double worst = 0.0;
  for (size_t p = 0; p < pred.size(); ++p) {
    const double dx = pred[p].x - truth[p].x;
    const double dy = pred[p].y - truth[p].y;
    worst = std::max(worst, dx * dx + dy * dy);
  }
  return worst;
}

double branch_l3(std::span<const Joint2D> pred_t1, std::span<const Joint2D> true_t1,
                 const Tensor& input_centers, bool absolute) {
  const size_t persons = pred_t1.size();
  if (persons != true_t1.size() || static_cast<int>(persons) != input_centers.nodes)
    throw ShapeMismatch("branch_l3: person count mismatch");
  if (persons <= 1) return 0.0;
  double worst = absolute ? 0.0 : -std::numeric_limits<double>::infinity();
  for (size_t p = 0; p < persons; ++p) {
    for (int t = 0; t < input_centers.frames; ++t) {
      const double ox = input_centers.at(0, t, static_cast<int>(p));
      const double oy = input_centers.at(1, t, static_cast<int>(p));
      const double pdx = pred_t1[p].x - ox, pdy = pred_t1[p].y - oy;
      const double tdx = true_t1[p].x - ox, tdy = true_t1[p].y - oy;
      const double diff = (pdx * pdx + pdy * pdy) - (tdx * tdx + tdy * tdy);
      worst = std::max(worst, absolute ? std::fabs(diff) : diff);
    }
  }
  return worst;
}

double combine_branches(double l1, double l2, double l3, const BranchWeights& bw) {
  return bw.w[0] * (l1 / bw.d[0]) + bw.w[1] * (l2 / bw.d[1]) + bw.w[2] * (l3 / bw.d[2]);
}

std::vector<FrameBranches> score_branches(const SceneClip& clip, const Checkpoint& ckpt,
                                          const ScoreOptions& opts) {
  // pose branch: max across the per-person windows targeting each frame
  std::map<int, double> l1;
  for (const auto& w : sliding_windows(clip, Level::low)) {
    const Tensor pred = model_forward(w, ckpt.low);
    const Tensor t1[] = {pred};
    const Tensor t2[] = {w.target};
    const double v = branch_l1(t1, t2, opts);
    auto [it, fresh] = l1.emplace(w.t_end, v);
    if (!fresh) it->second = std::max(it->second, v);
  }

  // center branches: one window per covered frame
  std::map<int, std::pair<double, double>> l23;
  for (const auto& w : sliding_windows(clip, Level::high)) {
    const Tensor pred = model_forward(w, ckpt.high);
    const int v_n = w.target.nodes;
    std::vector<Joint2D> pc(v_n), tc(v_n);
    for (int v = 0; v < v_n; ++v) {
      pc[v] = {pred.at(0, 0, v), pred.at(1, 0, v)};
      tc[v] = {w.target.at(0, 0, v), w.target.at(1, 0, v)};
    }
    const double s2 = branch_l2(pc, tc);
    const double s3 = branch_l3(pc, tc, w.input, opts.l3_absolute);
    l23.emplace(w.t_end, std::make_pair(s2, s3));
  }

  std::vector<FrameBranches> out;
  for (const auto& [frame, v1] : l1) {
    const auto it = l23.find(frame);
    if (it == l23.end()) continue;
    out.push_back({frame, v1, it->second.first, it->second.second});
  }
  return out;
}

ClipScores score_clip(const SceneClip& clip, const Checkpoint& ckpt,
                      const BranchWeights& weights, const ScoreOptions& opts) {
  const auto branches = score_branches(clip, ckpt, opts);
  std::map<int, FrameBranches> by_frame;
  for (const auto& b : branches) by_frame.emplace(b.frame_idx, b);

  ClipScores out;
  out.video_id = clip.video_id;
  out.frames.reserve(clip.num_frames);
  for (int t = 0; t < clip.num_frames; ++t) {
    FrameScore fs;
    fs.frame_idx = t;
    const auto it = by_frame.find(t);
    if (it != by_frame.end()) {
      fs.covered = true;
      fs.l1 = it->second.l1;
      fs.l2 = it->second.l2;
      fs.l3 = it->second.l3;
      fs.combined = combine_branches(fs.l1, fs.l2, fs.l3, weights);
    }
    out.frames.push_back(fs);
  }
  return out;
}

}  // namespace hstg
