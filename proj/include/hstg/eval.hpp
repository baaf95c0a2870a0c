#pragma once

#include <optional>

#include "hstg/cluster.hpp"

namespace hstg {

/// Rank-based (Mann-Whitney) frame-level ROC AUC; ties contribute 1/2.
/// Throws SingleClass unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

enum class Archetype { dense_small, sparse_large };
enum class AnomalyType { speed_burst, dispersal, pose_collapse, erratic_limbs };

const char* to_string(AnomalyType t);
AnomalyType anomaly_type_from_string(const std::string& s);  // throws InvalidConfig

struct AnomalySpec {
  AnomalyType type = AnomalyType::speed_burst;
  int onset = 0;
  int duration = 0;
  double magnitude = 1.0;
  int person = 0;  // ignored by dispersal (affects everyone)
};

/// Synthetic scene recipe. Persons follow smooth constant-speed paths with
/// gentle turning and wall-avoiding steering; limb joints carry sinusoidal
/// gait offsets. Dense scenes add per-joint jitter and occasional limb
/// glitches mimicking low-resolution tracker noise.
struct SynthConfig {
  std::string video_id = "clip";
  int frames = 90;
  int min_persons = 1;
  int max_persons = 1;
  double canvas_w = 256.0;
  double canvas_h = 256.0;
  double base_height = 120.0;
  double height_jitter = 8.0;
  double base_speed = 2.4;
  double speed_jitter = 0.5;
  double turn_rate = 0.1;          // radians/frame, std of direction drift
  double gait_amplitude = 0.06;    // fraction of body height
  double gait_freq = 0.45;         // radians/frame
  double joint_jitter = 0.0;       // pixels, per joint coordinate
  double glitch_prob = 0.0;        // per person-frame limb misdetection
  double glitch_min = 0.25;        // offset range, fraction of body height
  double glitch_max = 0.5;
  std::vector<AnomalySpec> anomalies;
  uint64_t seed = 0;
};

SynthConfig archetype_config(Archetype a, std::string video_id, uint64_t seed);

SceneClip generate_scene(const SynthConfig& cfg);  // throws InvalidConfig

/// Corpus recipe: dense/sparse clip mix with one seeded anomaly per test
/// clip. Pose anomalies go to sparse clips, motion anomalies to either,
/// mirroring where each branch is expected to pick them up.
struct CorpusSpec {
  int dense_clips = 0;
  int sparse_clips = 0;
  int frames = 210;
  uint64_t seed = 0;
  std::vector<AnomalyType> anomaly_types;  // empty: normal-only corpus
  bool single_person = false;
  std::string prefix;
};

std::vector<SynthConfig> corpus_configs(const CorpusSpec& spec);
std::vector<SceneClip> generate_corpus(const CorpusSpec& spec);

struct AblationRow {
  std::string subset;
  double auc = 0.0;
};

struct EvalReport {
  double auc = 0.0;
  size_t scored_frames = 0;
  size_t excluded_frames = 0;
  size_t positives = 0;
  size_t negatives = 0;
  std::vector<AblationRow> ablation;  // empty unless requested
};

/// Frame-level AUC over covered frames; with `ablation` also the AUC of each
/// branch subset recombined from the stored per-group subset weights.
EvalReport evaluate(std::span<const SceneClip> corpus, std::span<const ClipScores> scores,
                    const SceneModel& model, bool ablation);

}  // namespace hstg
