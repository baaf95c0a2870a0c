#include "hstg/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

#include "hstg/errors.hpp"

namespace hstg {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path);
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

}  // namespace

std::vector<SceneClip> read_corpus_jsonl(const std::string& path) {
  std::ifstream is = open_in(path);

  struct ClipAcc {
    std::map<std::string, std::vector<PoseFrame>> tracks;
    std::map<int, int> labels;
    bool labeled = false;
    int max_frame = -1;
  };
  std::map<std::string, ClipAcc> acc;

  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      const std::string video = rec.at("video_id").get<std::string>();
      const int frame = rec.at("frame_idx").get<int>();
      const std::string person = rec.at("person_id").get<std::string>();
      const auto& joints = rec.at("joints");
      if (frame < 0) throw FormatError("negative frame_idx");
      if (!joints.is_array() || joints.size() != kJointCount)
        throw FormatError("joints must be an array of 17 [x, y] pairs");
      PoseFrame pose;
      pose.person_id = person;
      pose.frame_idx = frame;
      for (int n = 0; n < kJointCount; ++n) {
        const auto& j = joints[n];
        if (!j.is_array() || j.size() != 2) throw FormatError("joint must be [x, y]");
        pose.joints[n].x = j[0].get<double>();
        pose.joints[n].y = j[1].get<double>();
        if (!std::isfinite(pose.joints[n].x) || !std::isfinite(pose.joints[n].y))
          throw FormatError("joint coordinates must be finite");
      }
      ClipAcc& ca = acc[video];
      auto& frames = ca.tracks[person];
      for (const auto& f : frames)
        if (f.frame_idx == frame)
          throw FormatError("duplicate record for " + video + "/" + person + "/" +
                            std::to_string(frame));
      frames.push_back(std::move(pose));
      ca.max_frame = std::max(ca.max_frame, frame);
      if (rec.contains("label")) {
        const int label = rec.at("label").get<int>();
        if (label != 0 && label != 1) throw FormatError("label must be 0 or 1");
        ca.labeled = true;
        ca.labels[frame] = std::max(ca.labels[frame], label);
      }
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }

  std::vector<SceneClip> clips;
  for (auto& [video, ca] : acc) {
    SceneClip clip;
    clip.video_id = video;
    clip.num_frames = ca.max_frame + 1;
    for (auto& [person, frames] : ca.tracks) {
      Track tr;
      tr.person_id = person;
      std::sort(frames.begin(), frames.end(),
                [](const PoseFrame& a, const PoseFrame& b) { return a.frame_idx < b.frame_idx; });
      tr.frames = std::move(frames);
      clip.tracks.push_back(std::move(tr));
    }
    if (ca.labeled) {
      clip.frame_labels.assign(clip.num_frames, 0);
      for (const auto& [frame, label] : ca.labels) clip.frame_labels[frame] = label;
    }
    clips.push_back(std::move(clip));
  }
  if (clips.empty()) throw EmptyDataset("no records in " + path);
  return clips;
}

void write_corpus_jsonl(std::span<const SceneClip> clips, const std::string& path) {
  std::ofstream os = open_out(path);
  for (const auto& clip : clips) {
    // frame-major, persons in track order, deterministic
    std::vector<std::pair<int, const PoseFrame*>> rows;
    for (const auto& track : clip.tracks)
      for (const auto& f : track.frames) rows.emplace_back(f.frame_idx, &f);
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second->person_id < b.second->person_id;
    });
    for (const auto& [frame, pose] : rows) {
      json rec;
      rec["video_id"] = clip.video_id;
      rec["frame_idx"] = frame;
      rec["person_id"] = pose->person_id;
      json joints = json::array();
      for (const auto& j : pose->joints) joints.push_back(json::array({j.x, j.y}));
      rec["joints"] = std::move(joints);
      if (clip.labeled()) rec["label"] = clip.frame_labels[frame];
      os << rec.dump() << "\n";
    }
  }
  if (!os) throw IoError("failed writing " + path);
}

void write_scores_jsonl(std::span<const ClipScores> scores, const std::string& path) {
  std::ofstream os = open_out(path);
  for (const auto& cs : scores)
    for (const auto& f : cs.frames) {
      if (!f.covered) continue;
      json rec;
      rec["video_id"] = cs.video_id;
      rec["frame_idx"] = f.frame_idx;
      rec["score"] = f.combined;
      rec["l1"] = f.l1;
      rec["l2"] = f.l2;
      rec["l3"] = f.l3;
      os << rec.dump() << "\n";
    }
  if (!os) throw IoError("failed writing " + path);
}

std::vector<ClipScores> read_scores_jsonl(const std::string& path) {
  std::ifstream is = open_in(path);
  std::map<std::string, std::vector<FrameScore>> acc;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      FrameScore fs;
      fs.frame_idx = rec.at("frame_idx").get<int>();
      fs.covered = true;
      fs.combined = rec.at("score").get<double>();
      fs.l1 = rec.at("l1").get<double>();
      fs.l2 = rec.at("l2").get<double>();
      fs.l3 = rec.at("l3").get<double>();
      acc[rec.at("video_id").get<std::string>()].push_back(fs);
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<ClipScores> out;
  for (auto& [video, frames] : acc) {
    ClipScores cs;
    cs.video_id = video;
    std::sort(frames.begin(), frames.end(),
              [](const FrameScore& a, const FrameScore& b) { return a.frame_idx < b.frame_idx; });
    cs.frames = std::move(frames);
    out.push_back(std::move(cs));
  }
  if (out.empty()) throw EmptyDataset("no scores in " + path);
  return out;
}

namespace {

json to_json(const SceneGroups& g) {
  json j;
  j["k"] = g.k;
  j["feature_names"] =
      json::array({"mean_person_count", "mean_height", "mean_bbox_area", "mean_displacement"});
  j["feature_mean"] = g.feature_mean;
  j["feature_std"] = g.feature_std;
  j["centroids"] = g.centroids;
  j["assignments"] = g.assignment;
  return j;
}

SceneGroups groups_from_json(const json& j) {
  SceneGroups g;
  g.k = j.at("k").get<int>();
  g.feature_mean = j.at("feature_mean").get<std::array<double, 4>>();
  g.feature_std = j.at("feature_std").get<std::array<double, 4>>();
  g.centroids = j.at("centroids").get<std::vector<std::array<double, 4>>>();
  g.assignment = j.at("assignments").get<std::map<std::string, int>>();
  if (static_cast<int>(g.centroids.size()) != g.k)
    throw FormatError("groups file: centroid count != k");
  return g;
}

}  // namespace

void save_scene_model(const SceneModel& model, const std::string& path) {
  json j;
  j["format"] = "hstg-groups v1";
  j["groups"] = to_json(model.groups);
  j["scoring"] = {{"l3_absolute", model.scoring.l3_absolute},
                  {"l1_window_mean", model.scoring.l1_window_mean}};
  json pg = json::array();
  for (const auto& gw : model.per_group) {
    json e;
    e["id"] = gw.group_id;
    e["weights"] = gw.weights.w;
    e["divisors"] = gw.weights.d;
    e["objective"] = gw.objective;
    e["subsets"] = gw.subsets;
    pg.push_back(std::move(e));
  }
  j["per_group"] = std::move(pg);
  std::ofstream os = open_out(path);
  os << j.dump(2) << "\n";
  if (!os) throw IoError("failed writing " + path);
}

SceneModel load_scene_model(const std::string& path) {
  std::ifstream is = open_in(path);
  json j;
  try {
    is >> j;
    if (j.at("format").get<std::string>() != "hstg-groups v1")
      throw FormatError("unsupported groups file version in " + path);
    SceneModel model;
    model.groups = groups_from_json(j.at("groups"));
    model.scoring.l3_absolute = j.at("scoring").at("l3_absolute").get<bool>();
    model.scoring.l1_window_mean = j.at("scoring").at("l1_window_mean").get<bool>();
    for (const auto& e : j.at("per_group")) {
      GroupWeights gw;
      gw.group_id = e.at("id").get<int>();
      gw.weights.w = e.at("weights").get<std::array<double, 3>>();
      gw.weights.d = e.at("divisors").get<std::array<double, 3>>();
      gw.objective = e.at("objective").get<double>();
      gw.subsets = e.at("subsets").get<std::map<std::string, std::array<double, 3>>>();
      model.per_group.push_back(std::move(gw));
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_loss_csv(std::span<const EpochStats> history, const std::string& path) {
  std::ofstream os = open_out(path);
  os << "epoch,lr,loss_low,loss_high\n";
  for (const auto& e : history)
    os << e.epoch << "," << fmt17(e.lr) << "," << fmt17(e.loss_low) << ","
       << fmt17(e.loss_high) << "\n";
  if (!os) throw IoError("failed writing " + path);
}

void write_curve_csv(std::span<const SceneClip> corpus, std::span<const ClipScores> scores,
                     const std::string& path) {
  std::ofstream os = open_out(path);
  os << "video_id,frame_idx,score,label\n";
  for (const auto& cs : scores) {
    const SceneClip* clip = nullptr;
    for (const auto& c : corpus)
      if (c.video_id == cs.video_id) {
        clip = &c;
        break;
      }
    for (const auto& f : cs.frames) {
      if (!f.covered) continue;
      const int label = clip && clip->labeled() ? clip->frame_labels[f.frame_idx] : 0;
      os << cs.video_id << "," << f.frame_idx << "," << fmt17(f.combined) << "," << label
         << "\n";
    }
  }
  if (!os) throw IoError("failed writing " + path);
}

void write_eval_json(const EvalReport& report, const std::string& path) {
  json j;
  j["auc"] = report.auc;
  j["scored_frames"] = report.scored_frames;
  j["excluded_frames"] = report.excluded_frames;
  j["positives"] = report.positives;
  j["negatives"] = report.negatives;
  if (!report.ablation.empty()) {
    json ab;
    for (const auto& row : report.ablation) ab[row.subset] = row.auc;
    j["ablation"] = std::move(ab);
  }
  std::ofstream os = open_out(path);
  os << j.dump(2) << "\n";
  if (!os) throw IoError("failed writing " + path);
}

}  // namespace hstg
