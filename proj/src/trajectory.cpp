#include "hstg/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hstg/errors.hpp"

namespace hstg {

const char* to_string(Level level) { return level == Level::low ? "low" : "high"; }

Level level_from_string(const std::string& s) {
  if (s == "low") return Level::low;
  if (s == "high") return Level::high;
  throw FormatError("unknown level: " + s);
}

double body_height(const PoseFrame& pose) {
  double lo = pose.joints[0].y, hi = pose.joints[0].y;
  for (const auto& j : pose.joints) {
    lo = std::min(lo, j.y);
    hi = std::max(hi, j.y);
  }
  const double h = hi - lo;
  if (!(h > kDegenerateHeightEps))
    throw DegeneratePose("body height " + std::to_string(h) + " below epsilon");
  return h;
}

Joint2D body_center(const PoseFrame& pose) {
  Joint2D c;
  for (int idx : kTorsoJoints) {
    c.x += pose.joints[idx].x;
    c.y += pose.joints[idx].y;
  }
  c.x /= kTorsoJoints.size();
  c.y /= kTorsoJoints.size();
  return c;
}

LowLevelPose low_level_features(const PoseFrame& pose) {
  LowLevelPose out;
  out.height = body_height(pose);
  out.center = body_center(pose);
  const double sx = out.height / 2.0;
  const double sy = out.height;
  for (int n = 0; n < kJointCount; ++n) {
    out.local[n].x = (pose.joints[n].x - out.center.x) / sx;
    out.local[n].y = (pose.joints[n].y - out.center.y) / sy;
  }
  return out;
}

namespace {

bool pose_usable(const PoseFrame& pose) {
  double lo = pose.joints[0].y, hi = pose.joints[0].y;
  for (const auto& j : pose.joints) {
    lo = std::min(lo, j.y);
    hi = std::max(hi, j.y);
  }
  return hi - lo > kDegenerateHeightEps;
}

// frame -> pose pointer for one track, usable poses only
std::map<int, const PoseFrame*> track_index(const Track& track) {
  std::map<int, const PoseFrame*> idx;
  for (const auto& f : track.frames)
    if (pose_usable(f)) idx.emplace(f.frame_idx, &f);
  return idx;
}

}  // namespace

HighLevelFrame high_level_features(const SceneClip& clip, int t) {
  std::vector<std::pair<std::string, Joint2D>> present;
  for (const auto& track : clip.tracks) {
    for (const auto& f : track.frames) {
      if (f.frame_idx == t && pose_usable(f)) {
        present.emplace_back(track.person_id, body_center(f));
        break;
      }
    }
  }
  if (present.empty()) throw EmptyFrame("no person present at frame " + std::to_string(t));
  std::sort(present.begin(), present.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  HighLevelFrame out;
  for (auto& [id, c] : present) {
    out.person_ids.push_back(std::move(id));
    out.centers.push_back(c);
  }
  return out;
}

namespace {

std::vector<WindowSample> low_windows(const SceneClip& clip) {
  std::vector<WindowSample> out;
  for (const auto& track : clip.tracks) {
    const auto idx = track_index(track);
    if (idx.empty()) continue;
    // walk maximal runs of consecutive frames
    std::vector<int> run;
    auto flush = [&] {
      for (size_t s = 0; s + kWindowLen <= run.size(); ++s) {
        WindowSample w;
        w.level = Level::low;
        w.video_id = clip.video_id;
        w.t_start = run[s];
        w.t_end = run[s] + kWindowLen - 1;
        w.person_ids = {track.person_id};
        w.input = Tensor(2, kWindowLen - 1, kJointCount);
        w.target = Tensor(2, 1, kJointCount);
        for (int k = 0; k < kWindowLen; ++k) {
          const auto feat = low_level_features(*idx.at(run[s + k]));
          for (int n = 0; n < kJointCount; ++n) {
            if (k < kWindowLen - 1) {
              w.input.at(0, k, n) = feat.local[n].x;
              w.input.at(1, k, n) = feat.local[n].y;
            } else {
              w.target.at(0, 0, n) = feat.local[n].x;
              w.target.at(1, 0, n) = feat.local[n].y;
            }
          }
        }
        out.push_back(std::move(w));
      }
      run.clear();
    };
    for (const auto& [frame, pose] : idx) {
      (void)pose;
      if (!run.empty() && frame != run.back() + 1) flush();
      run.push_back(frame);
    }
    flush();
  }
  return out;
}

std::vector<WindowSample> high_windows(const SceneClip& clip) {
  // per-person frame indexes, person ids sorted
  std::vector<std::pair<std::string, std::map<int, const PoseFrame*>>> tracks;
  for (const auto& track : clip.tracks) {
    auto idx = track_index(track);
    if (!idx.empty()) tracks.emplace_back(track.person_id, std::move(idx));
  }
  std::sort(tracks.begin(), tracks.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<WindowSample> out;
  for (int s = 0; s + kWindowLen <= clip.num_frames; ++s) {
    std::vector<const std::pair<std::string, std::map<int, const PoseFrame*>>*> persisting;
    for (const auto& tr : tracks) {
      bool all = true;
      for (int k = 0; k < kWindowLen; ++k)
        if (!tr.second.count(s + k)) {
          all = false;
          break;
        }
      if (all) persisting.push_back(&tr);
    }
    if (persisting.empty()) continue;
    const int v = static_cast<int>(persisting.size());
    WindowSample w;
    w.level = Level::high;
    w.video_id = clip.video_id;
    w.t_start = s;
    w.t_end = s + kWindowLen - 1;
    w.input = Tensor(2, kWindowLen - 1, v);
    w.target = Tensor(2, 1, v);
    for (int p = 0; p < v; ++p) {
      w.person_ids.push_back(persisting[p]->first);
      for (int k = 0; k < kWindowLen; ++k) {
        const Joint2D c = body_center(*persisting[p]->second.at(s + k));
        if (k < kWindowLen - 1) {
          w.input.at(0, k, p) = c.x;
          w.input.at(1, k, p) = c.y;
        } else {
          w.target.at(0, 0, p) = c.x;
          w.target.at(1, 0, p) = c.y;
        }
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

std::vector<WindowSample> sliding_windows(const SceneClip& clip, Level level) {
  return level == Level::low ? low_windows(clip) : high_windows(clip);
}

}  // namespace hstg
