#pragma once

#include <array>
#include <string>
#include <vector>

#include "hstg/tensor.hpp"

namespace hstg {

inline constexpr int kJointCount = 17;

// Below this body height (pixels) a pose is treated as tracker noise and the
// person counts as absent at that frame.
inline constexpr double kDegenerateHeightEps = 1e-6;

// Shoulders and hips, 0-based COCO-17 order; their mean is the body center.
inline constexpr std::array<int, 4> kTorsoJoints = {5, 6, 11, 12};

struct Joint2D {
  double x = 0.0;
  double y = 0.0;
};

struct PoseFrame {
  std::string person_id;
  int frame_idx = 0;
  std::array<Joint2D, kJointCount> joints{};
};

/// One person's per-frame skeleton sequence; frame_idx strictly increasing.
struct Track {
  std::string person_id;
  std::vector<PoseFrame> frames;
};

/// All tracks of one video plus optional per-frame anomaly labels.
struct SceneClip {
  std::string video_id;
  int num_frames = 0;
  std::vector<Track> tracks;
  std::vector<int> frame_labels;  // empty when the clip carries no labels
  bool labeled() const { return !frame_labels.empty(); }
};

/// Body-normalized pose: local joint offsets plus the center/height they
/// were derived from, so the original joints are reconstructible.
struct LowLevelPose {
  std::array<Joint2D, kJointCount> local{};  // dimensionless
  Joint2D center;                            // pixels
  double height = 0.0;                       // pixels
};

/// Centers of every person present at one frame, ordered by person id.
struct HighLevelFrame {
  std::vector<std::string> person_ids;
  std::vector<Joint2D> centers;  // pixels
};

enum class Level { low, high };
const char* to_string(Level level);
Level level_from_string(const std::string& s);

inline constexpr int kWindowLen = 5;  // 4 observed frames + 1 target

/// A 5-frame sliding window in feature space. Features are stored in natural
/// units: normalized local coordinates (low) or pixel centers (high). For the
/// high level, nodes are the persons present through the whole window.
struct WindowSample {
  Level level = Level::low;
  std::string video_id;
  int t_start = 0;
  int t_end = 0;  // target frame, t_start + 4
  std::vector<std::string> person_ids;
  Tensor input;   // (2, 4, V)
  Tensor target;  // (2, 1, V)
};

/// max_n(y) - min_n(y); throws DegeneratePose when <= kDegenerateHeightEps.
double body_height(const PoseFrame& pose);

/// Mean of the shoulder and hip joints (Joint indices kTorsoJoints).
Joint2D body_center(const PoseFrame& pose);

/// x_local = (x - cx) / (h/2), y_local = (y - cy) / h.
LowLevelPose low_level_features(const PoseFrame& pose);

/// Throws EmptyFrame when nobody is present at t.
HighLevelFrame high_level_features(const SceneClip& clip, int t);

std::vector<WindowSample> sliding_windows(const SceneClip& clip, Level level);

}  // namespace hstg
