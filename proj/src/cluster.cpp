#include "hstg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hstg/errors.hpp"
#include "hstg/rng.hpp"

namespace hstg {

namespace {

bool pose_usable(const PoseFrame& pose) {
  double lo = pose.joints[0].y, hi = pose.joints[0].y;
  for (const auto& j : pose.joints) {
    lo = std::min(lo, j.y);
    hi = std::max(hi, j.y);
  }
  return hi - lo > kDegenerateHeightEps;
}

double sqdist(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

SceneFeatures extract_scene_features(const SceneClip& clip) {
  if (clip.num_frames <= 0) throw EmptyClip("clip has no frames: " + clip.video_id);
  SceneFeatures f;
  size_t poses = 0;
  size_t steps = 0;
  std::vector<int> per_frame(clip.num_frames, 0);
  for (const auto& track : clip.tracks) {
    const PoseFrame* prev = nullptr;
    for (const auto& frame : track.frames) {
      if (!pose_usable(frame)) {
        prev = nullptr;
        continue;
      }
      per_frame[frame.frame_idx] += 1;
      double lox = frame.joints[0].x, hix = frame.joints[0].x;
      double loy = frame.joints[0].y, hiy = frame.joints[0].y;
      for (const auto& j : frame.joints) {
        lox = std::min(lox, j.x);
        hix = std::max(hix, j.x);
        loy = std::min(loy, j.y);
        hiy = std::max(hiy, j.y);
      }
      f.mean_height += hiy - loy;
      f.mean_bbox_area += (hix - lox) * (hiy - loy);
      ++poses;
      if (prev && prev->frame_idx + 1 == frame.frame_idx) {
        const Joint2D a = body_center(*prev);
        const Joint2D b = body_center(frame);
        f.mean_displacement += std::hypot(b.x - a.x, b.y - a.y);
        ++steps;
      }
      prev = &frame;
    }
  }
  if (poses == 0) throw EmptyClip("clip has no usable poses: " + clip.video_id);
  for (int c : per_frame) f.mean_person_count += c;
  f.mean_person_count /= clip.num_frames;
  f.mean_height /= static_cast<double>(poses);
  f.mean_bbox_area /= static_cast<double>(poses);
  f.mean_displacement = steps ? f.mean_displacement / static_cast<double>(steps) : 0.0;
  return f;
}

KMeansResult kmeans(std::span<const std::array<double, 4>> points, int k, uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || k > n) throw InvalidK("kmeans: k must be in [1, n]");
  Rng rng(seed);
  KMeansResult res;
  res.k = k;

  // k-means++ seeding
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  res.centroids.push_back(points[rng.uniform_int(n)]);
  while (static_cast<int>(res.centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      mind[i] = std::min(mind[i], sqdist(points[i], res.centroids.back()));
      total += mind[i];
    }
    int pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += mind[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_int(n));
    }
    res.centroids.push_back(points[pick]);
  }

  res.assignment.assign(n, -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestd = sqdist(points[i], res.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sqdist(points[i], res.centroids[c]);
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      inertia += bestd;
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    res.inertia_history.push_back(inertia);
    if (!changed) break;

    std::vector<std::array<double, 4>> sums(k, {0, 0, 0, 0});
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < 4; ++d) sums[res.assignment[i]][d] += points[i][d];
      counts[res.assignment[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // reseed an empty cluster with the point farthest from its centroid
        int far = 0;
        double fard = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = sqdist(points[i], res.centroids[res.assignment[i]]);
          if (d > fard) {
            fard = d;
            far = i;
          }
        }
        res.centroids[c] = points[far];
      } else {
        for (int d = 0; d < 4; ++d) res.centroids[c][d] = sums[c][d] / counts[c];
      }
    }
  }
  return res;
}

SceneGroups cluster_corpus(std::span<const SceneClip> clips, int k, uint64_t seed) {
  if (clips.empty()) throw EmptyDataset("cluster_corpus: no clips");
  std::vector<const SceneClip*> sorted;
  for (const auto& c : clips) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const SceneClip* a, const SceneClip* b) { return a->video_id < b->video_id; });

  std::vector<std::array<double, 4>> raw;
  for (const SceneClip* c : sorted) raw.push_back(extract_scene_features(*c).vec());

  SceneGroups g;
  g.k = k;
  const int n = static_cast<int>(raw.size());
  for (int d = 0; d < 4; ++d) {
    double mean = 0.0;
    for (const auto& r : raw) mean += r[d];
    mean /= n;
    double var = 0.0;
    for (const auto& r : raw) var += (r[d] - mean) * (r[d] - mean);
    double sd = std::sqrt(var / n);
    if (sd == 0.0) sd = 1.0;
    g.feature_mean[d] = mean;
    g.feature_std[d] = sd;
  }
  std::vector<std::array<double, 4>> pts(raw.size());
  for (size_t i = 0; i < raw.size(); ++i)
    for (int d = 0; d < 4; ++d) pts[i][d] = (raw[i][d] - g.feature_mean[d]) / g.feature_std[d];

  const KMeansResult km = kmeans(pts, k, seed);

  // relabel groups by first appearance in video-id order
  std::vector<int> relabel(k, -1);
  int next = 0;
  for (int i = 0; i < n; ++i)
    if (relabel[km.assignment[i]] < 0) relabel[km.assignment[i]] = next++;
  g.centroids.assign(k, {0, 0, 0, 0});
  for (int c = 0; c < k; ++c) g.centroids[relabel[c]] = km.centroids[c];
  for (int i = 0; i < n; ++i) g.assignment[sorted[i]->video_id] = relabel[km.assignment[i]];
  return g;
}

int assign_group(const SceneClip& clip, const SceneGroups& groups) {
  const auto raw = extract_scene_features(clip).vec();
  std::array<double, 4> p{};
  for (int d = 0; d < 4; ++d) p[d] = (raw[d] - groups.feature_mean[d]) / groups.feature_std[d];
  int best = 0;
  double bestd = sqdist(p, groups.centroids[0]);
  for (int c = 1; c < groups.k; ++c) {
    const double d = sqdist(p, groups.centroids[c]);
    if (d < bestd) {
      bestd = d;
      best = c;
    }
  }
  return best;
}

std::array<double, 3> branch_divisors(std::span<const FrameBranches> samples) {
  if (samples.empty()) throw EmptyGroup("branch_divisors: no samples");
  std::array<double, 3> mean{};
  for (const auto& s : samples) {
    mean[0] += s.l1;
    mean[1] += s.l2;
    mean[2] += s.l3;
  }
  for (double& m : mean) {
    m /= static_cast<double>(samples.size());
    if (!(m > 1e-12)) m = 1.0;
  }
  return mean;
}

namespace {

constexpr double kTieTol = 1e-12;

double fit_objective(std::span<const FrameBranches> samples,
                     const std::array<double, 3>& divisors, const std::array<double, 3>& w) {
  double sum = 0.0, sumsq = 0.0;
  for (const auto& s : samples) {
    const double c = w[0] * (s.l1 / divisors[0]) + w[1] * (s.l2 / divisors[1]) +
                     w[2] * (s.l3 / divisors[2]);
    sum += c;
    sumsq += c * c;
  }
  const double n = static_cast<double>(samples.size());
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  return mean + std::sqrt(var);
}

}  // namespace

WeightFit fit_weights_over(std::span<const FrameBranches> samples,
                           const std::array<double, 3>& divisors, std::array<bool, 3> active) {
  if (samples.empty()) throw EmptyGroup("fit_weights_over: no samples");

  // drop branches that are identically ~zero on this group; weighting them is
  // meaningless and would win the objective with a constant-zero score
  std::array<double, 3> mean{};
  for (const auto& s : samples) {
    mean[0] += s.l1;
    mean[1] += s.l2;
    mean[2] += s.l3;
  }
  std::array<bool, 3> live = active;
  int live_n = 0;
  for (int b = 0; b < 3; ++b) {
    if (live[b] && mean[b] / static_cast<double>(samples.size()) <= 1e-12) live[b] = false;
    live_n += live[b] ? 1 : 0;
  }
  if (live_n == 0) {
    // nothing informative: spread uniformly over the requested branches
    WeightFit uf;
    int req = 0;
    for (bool a : active) req += a ? 1 : 0;
    for (int b = 0; b < 3; ++b) uf.w[b] = active[b] ? 1.0 / req : 0.0;
    uf.objective = fit_objective(samples, divisors, uf.w);
    return uf;
  }

  std::vector<std::array<double, 3>> candidates;
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j + i <= 10; ++j) {
      const int k = 10 - i - j;
      std::array<double, 3> w = {i / 10.0, j / 10.0, k / 10.0};
      bool ok = true;
      for (int b = 0; b < 3; ++b)
        if (!live[b] && w[b] != 0.0) ok = false;
      if (ok) candidates.push_back(w);
    }
  // the exact uniform triple over live branches; the 0.1 grid does not
  // contain it, and the fitted objective must never exceed it
  {
    std::array<double, 3> u{};
    for (int b = 0; b < 3; ++b) u[b] = live[b] ? 1.0 / live_n : 0.0;
    candidates.push_back(u);
  }
  std::sort(candidates.begin(), candidates.end());

  WeightFit best;
  bool first = true;
  for (const auto& w : candidates) {
    const double obj = fit_objective(samples, divisors, w);
    if (first || obj < best.objective - kTieTol * std::max(1.0, std::fabs(best.objective))) {
      best.w = w;
      best.objective = obj;
      first = false;
    }
  }
  return best;
}

BranchWeights fit_branch_weights(std::span<const FrameBranches> samples) {
  const auto d = branch_divisors(samples);
  const WeightFit fit = fit_weights_over(samples, d, {true, true, true});
  BranchWeights bw;
  bw.w = fit.w;
  bw.d = d;
  return bw;
}

const std::array<std::pair<std::string, std::array<bool, 3>>, 7> kBranchSubsets = {{
    {"l1", {true, false, false}},
    {"l2", {false, true, false}},
    {"l3", {false, false, true}},
    {"l1l2", {true, true, false}},
    {"l2l3", {false, true, true}},
    {"l1l3", {true, false, true}},
    {"l1l2l3", {true, true, true}},
}};

GroupWeights fit_group_weights(int group_id, std::span<const FrameBranches> samples) {
  GroupWeights gw;
  gw.group_id = group_id;
  gw.weights.d = branch_divisors(samples);
  for (const auto& [name, active] : kBranchSubsets) {
    const WeightFit fit = fit_weights_over(samples, gw.weights.d, active);
    gw.subsets[name] = fit.w;
    if (name == "l1l2l3") {
      gw.weights.w = fit.w;
      gw.objective = fit.objective;
    }
  }
  return gw;
}

}  // namespace hstg
