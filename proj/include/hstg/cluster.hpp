#pragma once

#include <map>
#include <string>

#include "hstg/scoring.hpp"

namespace hstg {

/// Scene statistics driving the grouping: density, person scale and motion.
/// The displacement feature stands in for optical flow at track granularity.
struct SceneFeatures {
  double mean_person_count = 0.0;   // persons per frame
  double mean_height = 0.0;         // pixels
  double mean_bbox_area = 0.0;      // pixels^2, joint bounding box
  double mean_displacement = 0.0;   // pixels per frame, body centers
  std::array<double, 4> vec() const {
    return {mean_person_count, mean_height, mean_bbox_area, mean_displacement};
  }
};

SceneFeatures extract_scene_features(const SceneClip& clip);  // throws EmptyClip

struct KMeansResult {
  int k = 0;
  std::vector<std::array<double, 4>> centroids;
  std::vector<int> assignment;           // per input point
  std::vector<double> inertia_history;   // per Lloyd iteration
};

/// k-means++ seeding, Lloyd iterations to an assignment fixpoint (<= 300),
/// deterministic given the seed. Ties and empty clusters resolve to the
/// lowest index.
KMeansResult kmeans(std::span<const std::array<double, 4>> points, int k, uint64_t seed);

struct SceneGroups {
  int k = 0;
  std::array<double, 4> feature_mean{};
  std::array<double, 4> feature_std{};
  std::vector<std::array<double, 4>> centroids;  // standardized space
  std::map<std::string, int> assignment;         // video id -> group
};

/// Extracts features, standardizes them over the corpus (z-score) and runs
/// kmeans. Clips are processed in video-id order and groups are relabeled by
/// first appearance, so the result is independent of input ordering.
SceneGroups cluster_corpus(std::span<const SceneClip> clips, int k, uint64_t seed);

/// Nearest centroid in standardized feature space; ties break to lowest id.
int assign_group(const SceneClip& clip, const SceneGroups& groups);

/// Branch means over a group's training windows; a degenerate (zero) branch
/// keeps divisor 1 so scores stay finite.
std::array<double, 3> branch_divisors(std::span<const FrameBranches> samples);

struct WeightFit {
  std::array<double, 3> w{};
  double objective = 0.0;
};

/// Grid search over the weight simplex (step 0.1 plus the exact uniform
/// triple) restricted to `active` branches, minimizing mean + std of the
/// combined normalized score over the group's windows. Branches that are
/// identically zero on the group are dropped from the support. Objective
/// ties break to the lexicographically smallest triple.
WeightFit fit_weights_over(std::span<const FrameBranches> samples,
                           const std::array<double, 3>& divisors,
                           std::array<bool, 3> active);

/// Full three-branch fit including divisor computation.
BranchWeights fit_branch_weights(std::span<const FrameBranches> samples);  // throws EmptyGroup

/// One scene group's fitted arbiter: full weights plus the seven
/// branch-subset refits used by the ablation report.
struct GroupWeights {
  int group_id = 0;
  BranchWeights weights;
  double objective = 0.0;
  std::map<std::string, std::array<double, 3>> subsets;  // "l1", "l1l3", ...
};

GroupWeights fit_group_weights(int group_id, std::span<const FrameBranches> samples);

extern const std::array<std::pair<std::string, std::array<bool, 3>>, 7> kBranchSubsets;

/// Everything score/eval need: clustering, scoring flags and per-group
/// weights. Persisted as one JSON document.
struct SceneModel {
  SceneGroups groups;
  ScoreOptions scoring;
  std::vector<GroupWeights> per_group;
};

}  // namespace hstg
