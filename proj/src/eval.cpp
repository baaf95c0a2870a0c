#include "hstg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hstg/errors.hpp"
#include "hstg/rng.hpp"

namespace hstg {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ShapeMismatch("roc_auc: size mismatch");
  size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ShapeMismatch("roc_auc: labels must be 0/1");
    pos += l;
  }
  const size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw SingleClass("roc_auc: needs both classes");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average ranks over tie runs
  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1) pos_rank_sum += avg_rank;
    i = j + 1;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

const char* to_string(AnomalyType t) {
  switch (t) {
    case AnomalyType::speed_burst: return "speed-burst";
    case AnomalyType::dispersal: return "dispersal";
    case AnomalyType::pose_collapse: return "pose-collapse";
    case AnomalyType::erratic_limbs: return "erratic-limbs";
  }
  return "?";
}

AnomalyType anomaly_type_from_string(const std::string& s) {
  if (s == "speed-burst") return AnomalyType::speed_burst;
  if (s == "dispersal") return AnomalyType::dispersal;
  if (s == "pose-collapse") return AnomalyType::pose_collapse;
  if (s == "erratic-limbs") return AnomalyType::erratic_limbs;
  throw InvalidConfig("unknown anomaly type: " + s);
}

SynthConfig archetype_config(Archetype a, std::string video_id, uint64_t seed) {
  SynthConfig cfg;
  cfg.video_id = std::move(video_id);
  cfg.seed = seed;
  if (a == Archetype::dense_small) {
    cfg.min_persons = 9;
    cfg.max_persons = 12;
    cfg.base_height = 20.0;
    cfg.height_jitter = 1.5;
    cfg.base_speed = 1.7;
    cfg.speed_jitter = 0.3;
    cfg.turn_rate = 0.02;
    cfg.gait_amplitude = 0.05;
    cfg.gait_freq = 0.5;
    cfg.joint_jitter = 0.4;
    cfg.glitch_prob = 0.03;
  } else {
    cfg.min_persons = 2;
    cfg.max_persons = 3;
    cfg.canvas_w = 512.0;
    cfg.canvas_h = 512.0;
    cfg.base_height = 120.0;
    cfg.height_jitter = 8.0;
    cfg.base_speed = 2.4;
    cfg.speed_jitter = 0.35;
    cfg.turn_rate = 0.04;
    cfg.gait_amplitude = 0.06;
    cfg.gait_freq = 0.45;
    cfg.joint_jitter = 0.25;
    cfg.glitch_prob = 0.015;
  }
  return cfg;
}

namespace {

// 17-joint body template in height-normalized units (y down, height 1).
constexpr std::array<Joint2D, kJointCount> kBodyTemplate = {{
    {0.00, -0.46},   // nose
    {0.03, -0.49},  {-0.03, -0.49},  // eyes
    {0.06, -0.47},  {-0.06, -0.47},  // ears
    {0.11, -0.30},  {-0.11, -0.30},  // shoulders
    {0.16, -0.12},  {-0.16, -0.12},  // elbows
    {0.18, 0.05},   {-0.18, 0.05},   // wrists
    {0.07, 0.02},   {-0.07, 0.02},   // hips
    {0.08, 0.26},   {-0.08, 0.26},   // knees
    {0.09, 0.51},   {-0.09, 0.51},   // ankles
}};

constexpr std::array<int, 8> kLimbJoints = {7, 8, 9, 10, 13, 14, 15, 16};

constexpr double kPi = 3.14159265358979323846;

void validate(const SynthConfig& cfg) {
  if (cfg.frames < 1) throw InvalidConfig("frames must be >= 1");
  if (cfg.min_persons < 1 || cfg.max_persons < cfg.min_persons)
    throw InvalidConfig("bad person count range");
  if (cfg.base_height <= 0 || cfg.base_speed < 0) throw InvalidConfig("bad height/speed");
  if (cfg.gait_amplitude < 0 || cfg.joint_jitter < 0 || cfg.glitch_prob < 0 ||
      cfg.glitch_prob > 1)
    throw InvalidConfig("bad noise parameters");
  for (const auto& a : cfg.anomalies) {
    if (a.onset < 0 || a.duration < 1 || a.onset + a.duration > cfg.frames)
      throw InvalidConfig("anomaly window out of range");
    if (!(a.magnitude > 0)) throw InvalidConfig("anomaly magnitude must be > 0");
    if (a.person < 0) throw InvalidConfig("anomaly person must be >= 0");
  }
  // a person must fit inside the canvas with margins
  const double h = cfg.base_height + 3.0 * cfg.height_jitter;
  if (cfg.canvas_w < h || cfg.canvas_h < 1.6 * h)
    throw InvalidConfig("canvas too small for the configured body height");
}

struct Person {
  std::string id;
  double height = 0;
  double speed = 0;
  double dir = 0;
  double gait_phase = 0;
  double gait_freq = 0;
  Joint2D pos;        // template origin position
  double away_dir = 0;  // dispersal direction, set at onset
};

bool anomaly_active(const AnomalySpec& a, int t) {
  return t >= a.onset && t < a.onset + a.duration;
}

}  // namespace

SceneClip generate_scene(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);

  const int persons =
      cfg.min_persons + static_cast<int>(rng.uniform_int(cfg.max_persons - cfg.min_persons + 1));

  std::vector<Person> people(persons);
  for (int p = 0; p < persons; ++p) {
    Person& pr = people[p];
    char buf[8];
    std::snprintf(buf, sizeof(buf), "p%02d", p);
    pr.id = buf;
    pr.height = std::max(1.0, cfg.base_height + cfg.height_jitter * rng.normal());
    pr.speed = std::max(0.1, cfg.base_speed + cfg.speed_jitter * rng.normal());
    pr.dir = rng.uniform(0.0, 2.0 * kPi);
    pr.gait_phase = rng.uniform(0.0, 2.0 * kPi);
    pr.gait_freq = cfg.gait_freq * rng.uniform(0.8, 1.2);
    const double mx = 0.30 * pr.height;
    const double my = 0.60 * pr.height;
    pr.pos.x = rng.uniform(mx, cfg.canvas_w - mx);
    pr.pos.y = rng.uniform(my, cfg.canvas_h - my);
  }

  SceneClip clip;
  clip.video_id = cfg.video_id;
  clip.num_frames = cfg.frames;
  clip.frame_labels.assign(cfg.frames, 0);
  clip.tracks.resize(persons);
  for (int p = 0; p < persons; ++p) clip.tracks[p].person_id = people[p].id;

  for (int t = 0; t < cfg.frames; ++t) {
    // labels: any active anomaly marks the frame
    for (const auto& a : cfg.anomalies)
      if (anomaly_active(a, t)) clip.frame_labels[t] = 1;

    // dispersal onset: aim everyone away from the crowd centroid
    for (const auto& a : cfg.anomalies) {
      if (a.type != AnomalyType::dispersal || t != a.onset) continue;
      Joint2D centroid{0, 0};
      for (const auto& pr : people) {
        centroid.x += pr.pos.x;
        centroid.y += pr.pos.y;
      }
      centroid.x /= persons;
      centroid.y /= persons;
      for (auto& pr : people) {
        const double dx = pr.pos.x - centroid.x;
        const double dy = pr.pos.y - centroid.y;
        pr.away_dir = (dx == 0.0 && dy == 0.0) ? pr.dir : std::atan2(dy, dx);
      }
    }

    for (int p = 0; p < persons; ++p) {
      Person& pr = people[p];

      // pose distortions active this frame
      double squash_x = 1.0, squash_y = 1.0;
      double erratic = 0.0;
      for (const auto& a : cfg.anomalies) {
        if (!anomaly_active(a, t)) continue;
        if (a.type == AnomalyType::pose_collapse && a.person % persons == p) {
          squash_x = 1.0 + 0.5 * (a.magnitude - 1.0);
          squash_y = 1.0 / a.magnitude;
        }
        if (a.type == AnomalyType::erratic_limbs && a.person % persons == p)
          erratic = a.magnitude * cfg.gait_amplitude * pr.height;
      }

      PoseFrame frame;
      frame.person_id = pr.id;
      frame.frame_idx = t;
      const double gait = cfg.gait_amplitude * pr.height;
      for (int n = 0; n < kJointCount; ++n) {
        double lx = kBodyTemplate[n].x * squash_x;
        double ly = kBodyTemplate[n].y * squash_y;
        frame.joints[n].x = pr.pos.x + pr.height * lx;
        frame.joints[n].y = pr.pos.y + pr.height * ly;
      }
      // gait swing on limbs, left and right in opposite phase
      for (size_t li = 0; li < kLimbJoints.size(); ++li) {
        const int n = kLimbJoints[li];
        const double side = (li % 2 == 0) ? 0.0 : kPi;
        frame.joints[n].x += gait * std::sin(pr.gait_freq * t + pr.gait_phase + side);
        frame.joints[n].y += 0.3 * gait * std::sin(2.0 * pr.gait_freq * t + pr.gait_phase);
      }
      if (erratic > 0.0)
        for (int n : kLimbJoints) {
          frame.joints[n].x += rng.uniform(-erratic, erratic);
          frame.joints[n].y += rng.uniform(-erratic, erratic);
        }
      if (cfg.glitch_prob > 0.0 && rng.uniform() < cfg.glitch_prob) {
        const int n = kLimbJoints[rng.uniform_int(kLimbJoints.size())];
        const double r = pr.height * rng.uniform(cfg.glitch_min, cfg.glitch_max);
        const double ang = rng.uniform(0.0, 2.0 * kPi);
        frame.joints[n].x += r * std::cos(ang);
        frame.joints[n].y += r * std::sin(ang);
      }
      if (cfg.joint_jitter > 0.0)
        for (auto& j : frame.joints) {
          j.x += cfg.joint_jitter * rng.normal();
          j.y += cfg.joint_jitter * rng.normal();
        }
      clip.tracks[p].frames.push_back(std::move(frame));

      // advance the path: speed multipliers and direction overrides first
      double mult = 1.0;
      bool dir_locked = false;
      for (const auto& a : cfg.anomalies) {
        if (!anomaly_active(a, t)) continue;
        if (a.type == AnomalyType::speed_burst && a.person % persons == p) mult *= a.magnitude;
        if (a.type == AnomalyType::dispersal) {
          mult *= a.magnitude;
          pr.dir = pr.away_dir;
          dir_locked = true;
        }
      }
      if (!dir_locked && cfg.turn_rate > 0.0) pr.dir += cfg.turn_rate * rng.normal();

      // soft wall avoidance: long smooth arcs toward the canvas center so the
      // boundary behaviour stays predictable from a 4-frame history
      const double mx = 0.30 * pr.height;
      const double my = 0.60 * pr.height;
      const double guard = 14.0 * std::max(pr.speed, 1.0);
      if (!dir_locked &&
          (pr.pos.x < mx + guard || pr.pos.x > cfg.canvas_w - mx - guard ||
           pr.pos.y < my + guard || pr.pos.y > cfg.canvas_h - my - guard)) {
        const double want = std::atan2(cfg.canvas_h / 2 - pr.pos.y, cfg.canvas_w / 2 - pr.pos.x);
        double delta = std::remainder(want - pr.dir, 2.0 * kPi);
        delta = std::clamp(delta, -0.12, 0.12);
        pr.dir += delta;
      }
      double nx = pr.pos.x + pr.speed * mult * std::cos(pr.dir);
      double ny = pr.pos.y + pr.speed * mult * std::sin(pr.dir);
      // hard reflection as a fallback; preserves step length
      for (int guard_iter = 0; guard_iter < 8; ++guard_iter) {
        bool ok = true;
        if (nx < mx) { nx = 2 * mx - nx; pr.dir = kPi - pr.dir; ok = false; }
        if (nx > cfg.canvas_w - mx) { nx = 2 * (cfg.canvas_w - mx) - nx; pr.dir = kPi - pr.dir; ok = false; }
        if (ny < my) { ny = 2 * my - ny; pr.dir = -pr.dir; ok = false; }
        if (ny > cfg.canvas_h - my) { ny = 2 * (cfg.canvas_h - my) - ny; pr.dir = -pr.dir; ok = false; }
        if (ok) break;
      }
      pr.pos = {nx, ny};
    }
  }
  return clip;
}

std::vector<SynthConfig> corpus_configs(const CorpusSpec& spec) {
  std::vector<SynthConfig> out;
  Rng seeder(spec.seed);
  char buf[64];

  auto anomalies_for = [&](Archetype arch, int persons, Rng& rng,
                           int index) -> std::vector<AnomalySpec> {
    if (spec.anomaly_types.empty()) return {};
    std::vector<AnomalyType> allowed;
    for (AnomalyType t : spec.anomaly_types) {
      const bool pose_anomaly =
          t == AnomalyType::pose_collapse || t == AnomalyType::erratic_limbs;
      if (arch == Archetype::dense_small && pose_anomaly) continue;
      allowed.push_back(t);
    }
    if (allowed.empty()) return {};
    AnomalySpec a;
    a.type = allowed[index % allowed.size()];
    a.onset = 25 + static_cast<int>(rng.uniform_int(std::max(1, spec.frames - 45)));
    a.duration = 10 + static_cast<int>(rng.uniform_int(5));
    a.person = static_cast<int>(rng.uniform_int(persons));
    switch (a.type) {
      case AnomalyType::speed_burst: a.magnitude = rng.uniform(4.5, 5.5); break;
      case AnomalyType::dispersal: a.magnitude = rng.uniform(3.5, 4.5); break;
      case AnomalyType::pose_collapse: a.magnitude = rng.uniform(2.7, 3.3); break;
      case AnomalyType::erratic_limbs: a.magnitude = rng.uniform(5.0, 7.0); break;
    }
    return {a};
  };

  for (int i = 0; i < spec.dense_clips; ++i) {
    std::snprintf(buf, sizeof(buf), "%sdense%02d", spec.prefix.c_str(), i);
    SynthConfig cfg = archetype_config(Archetype::dense_small, buf, seeder.next_u64());
    cfg.frames = spec.frames;
    const int persons = 9 + (i % 4);
    cfg.min_persons = cfg.max_persons = persons;
    Rng rng(cfg.seed ^ 0x5eedbeefULL);
    cfg.anomalies = anomalies_for(Archetype::dense_small, persons, rng, i);
    out.push_back(std::move(cfg));
  }
  for (int i = 0; i < spec.sparse_clips; ++i) {
    std::snprintf(buf, sizeof(buf), "%ssparse%02d", spec.prefix.c_str(), i);
    SynthConfig cfg = archetype_config(Archetype::sparse_large, buf, seeder.next_u64());
    cfg.frames = spec.frames;
    const int persons = spec.single_person ? 1 : 2 + (i % 2);
    cfg.min_persons = cfg.max_persons = persons;
    Rng rng(cfg.seed ^ 0x5eedbeefULL);
    cfg.anomalies = anomalies_for(Archetype::sparse_large, persons, rng, i);
    out.push_back(std::move(cfg));
  }
  return out;
}

std::vector<SceneClip> generate_corpus(const CorpusSpec& spec) {
  std::vector<SceneClip> out;
  for (const auto& cfg : corpus_configs(spec)) out.push_back(generate_scene(cfg));
  return out;
}

EvalReport evaluate(std::span<const SceneClip> corpus, std::span<const ClipScores> scores,
                    const SceneModel& model, bool ablation) {
  EvalReport rep;
  std::vector<double> combined;
  std::vector<int> labels;
  // per-frame raw branches + owning group, for subset recombination
  std::vector<FrameBranches> raw;
  std::vector<int> raw_group;

  for (const auto& cs : scores) {
    const SceneClip* clip = nullptr;
    for (const auto& c : corpus)
      if (c.video_id == cs.video_id) {
        clip = &c;
        break;
      }
    if (!clip) throw FormatError("scores reference unknown video " + cs.video_id);
    int group = 0;
    if (const auto it = model.groups.assignment.find(cs.video_id);
        it != model.groups.assignment.end()) {
      group = it->second;
    } else {
      group = assign_group(*clip, model.groups);
    }
    size_t covered = 0;
    for (const auto& f : cs.frames) {
      if (!f.covered) continue;
      ++covered;
      combined.push_back(f.combined);
      const int label =
          clip->labeled() && f.frame_idx < static_cast<int>(clip->frame_labels.size())
              ? clip->frame_labels[f.frame_idx]
              : 0;
      labels.push_back(label);
      raw.push_back({f.frame_idx, f.l1, f.l2, f.l3});
      raw_group.push_back(group);
    }
    rep.excluded_frames += static_cast<size_t>(clip->num_frames) - covered;
  }
  rep.scored_frames = combined.size();
  for (int l : labels) rep.positives += l;
  rep.negatives = rep.scored_frames - rep.positives;
  rep.auc = roc_auc(combined, labels);

  if (ablation) {
    std::map<int, const GroupWeights*> by_id;
    for (const auto& gw : model.per_group) by_id[gw.group_id] = &gw;
    for (const auto& [name, active] : kBranchSubsets) {
      (void)active;
      std::vector<double> sub(raw.size());
      for (size_t i = 0; i < raw.size(); ++i) {
        const GroupWeights& gw = *by_id.at(raw_group[i]);
        const auto& w = gw.subsets.at(name);
        sub[i] = w[0] * (raw[i].l1 / gw.weights.d[0]) + w[1] * (raw[i].l2 / gw.weights.d[1]) +
                 w[2] * (raw[i].l3 / gw.weights.d[2]);
      }
      rep.ablation.push_back({name, roc_auc(sub, labels)});
    }
  }
  return rep;
}

}  // namespace hstg
