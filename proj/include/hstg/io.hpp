#pragma once

#include <string>
#include <vector>

#include "hstg/eval.hpp"

namespace hstg {

// Track ingestion format, one JSON record per person per frame:
// {"video_id": str, "frame_idx": int, "person_id": str,
//  "joints": [[x, y] x17], "label": 0|1 (optional, frame-level)}
std::vector<SceneClip> read_corpus_jsonl(const std::string& path);
void write_corpus_jsonl(std::span<const SceneClip> clips, const std::string& path);

// {"video_id", "frame_idx", "score", "l1", "l2", "l3"}, covered frames only
void write_scores_jsonl(std::span<const ClipScores> scores, const std::string& path);
std::vector<ClipScores> read_scores_jsonl(const std::string& path);

// groups + weights document; per_group may be empty (cluster stage)
void save_scene_model(const SceneModel& model, const std::string& path);
SceneModel load_scene_model(const std::string& path);

void write_loss_csv(std::span<const EpochStats> history, const std::string& path);

// frame_idx/score/label rows for external plotting
void write_curve_csv(std::span<const SceneClip> corpus, std::span<const ClipScores> scores,
                     const std::string& path);

void write_eval_json(const EvalReport& report, const std::string& path);

}  // namespace hstg
