// hstg: hierarchical skeleton-trajectory anomaly detection pipeline.
// Subcommands: generate | train | cluster | fitweights | score | eval.
// Exit codes: 0 success, 2 usage/config error, 3 data/format error,
// 4 numeric failure.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "hstg/errors.hpp"
#include "hstg/eval.hpp"
#include "hstg/io.hpp"
#include "hstg/kernels.hpp"
#include "hstg/rng.hpp"

namespace fs = std::filesystem;
using namespace hstg;

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  Rng r(seed ^ (salt * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
  return r.next_u64();
}

std::string group_ckpt_path(const std::string& dir, int group) {
  return dir + "/group_" + std::to_string(group) + ".ckpt";
}

std::vector<Checkpoint> load_group_checkpoints(const std::string& dir, const SceneGroups& groups) {
  std::vector<Checkpoint> out;
  for (int g = 0; g < groups.k; ++g) out.push_back(load_checkpoint(group_ckpt_path(dir, g)));
  return out;
}

// windows of every clip assigned to each group, both levels
struct GroupWindows {
  std::vector<WindowSample> low;
  std::vector<WindowSample> high;
};

std::vector<GroupWindows> collect_windows(std::span<const SceneClip> clips,
                                          const SceneGroups& groups) {
  std::vector<GroupWindows> out(groups.k);
  for (const auto& clip : clips) {
    const int g = groups.assignment.at(clip.video_id);
    auto lows = sliding_windows(clip, Level::low);
    auto highs = sliding_windows(clip, Level::high);
    auto& gw = out[g];
    gw.low.insert(gw.low.end(), std::make_move_iterator(lows.begin()),
                  std::make_move_iterator(lows.end()));
    gw.high.insert(gw.high.end(), std::make_move_iterator(highs.begin()),
                   std::make_move_iterator(highs.end()));
  }
  return out;
}

struct TrainFlags {
  TrainConfig cfg;
  bool binary_low_edges = false;
  double coord_scale = 16.0;
};

std::vector<TrainResult> train_groups(std::span<const SceneClip> clips,
                                      const SceneGroups& groups, const TrainFlags& flags) {
  const auto windows = collect_windows(clips, groups);
  std::vector<TrainResult> results;
  for (int g = 0; g < groups.k; ++g) {
    ModelConfig low_cfg = default_low_config();
    low_cfg.binary_low_edges = flags.binary_low_edges;
    ModelConfig high_cfg = default_high_config();
    high_cfg.coord_scale = flags.coord_scale;
    TrainConfig cfg = flags.cfg;
    cfg.seed = mix_seed(flags.cfg.seed, static_cast<uint64_t>(g) + 1);
    results.push_back(train(windows[g].low, windows[g].high, low_cfg, high_cfg, cfg,
                            std::to_string(g)));
  }
  return results;
}

std::vector<std::vector<FrameBranches>> collect_branches(std::span<const SceneClip> clips,
                                                         const SceneGroups& groups,
                                                         std::span<const Checkpoint> ckpts,
                                                         const ScoreOptions& opts) {
  std::vector<std::vector<FrameBranches>> out(groups.k);
  for (const auto& clip : clips) {
    const int g = groups.assignment.at(clip.video_id);
    for (const auto& b : score_branches(clip, ckpts[g], opts)) out[g].push_back(b);
  }
  return out;
}

// window-count weighted mean of the per-group fitted objectives
double corpus_objective(const std::vector<std::vector<FrameBranches>>& branches,
                        std::vector<GroupWeights>* fits) {
  double num = 0.0, den = 0.0;
  for (size_t g = 0; g < branches.size(); ++g) {
    if (branches[g].empty()) throw EmptyGroup("group " + std::to_string(g) + " has no windows");
    GroupWeights gw = fit_group_weights(static_cast<int>(g), branches[g]);
    num += gw.objective * static_cast<double>(branches[g].size());
    den += static_cast<double>(branches[g].size());
    if (fits) fits->push_back(std::move(gw));
  }
  return num / den;
}

int run_generate(const std::string& train_out, const std::string& test_out, uint64_t seed,
                 int frames, int train_dense, int train_sparse, int test_dense,
                 int test_sparse, const std::vector<std::string>& anomaly_names,
                 bool single_person) {
  std::vector<AnomalyType> types;
  for (const auto& n : anomaly_names) types.push_back(anomaly_type_from_string(n));
  if (!train_out.empty()) {
    CorpusSpec spec;
    spec.dense_clips = train_dense;
    spec.sparse_clips = train_sparse;
    spec.frames = frames;
    spec.seed = mix_seed(seed, 1);
    spec.single_person = single_person;
    const auto clips = generate_corpus(spec);
    write_corpus_jsonl(clips, train_out);
    std::cout << "wrote " << clips.size() << " training clips to " << train_out << "\n";
  }
  if (!test_out.empty()) {
    CorpusSpec spec;
    spec.dense_clips = test_dense;
    spec.sparse_clips = test_sparse;
    spec.frames = frames;
    spec.seed = mix_seed(seed, 2);  // held out from the training corpus
    spec.anomaly_types = types;
    spec.single_person = single_person;
    const auto clips = generate_corpus(spec);
    write_corpus_jsonl(clips, test_out);
    size_t positives = 0;
    for (const auto& c : clips)
      for (int l : c.frame_labels) positives += l;
    std::cout << "wrote " << clips.size() << " test clips to " << test_out << " ("
              << positives << " anomalous frames)\n";
  }
  return 0;
}

int run_train(const std::string& corpus, const std::string& out_dir, int k,
              const TrainFlags& flags, uint64_t cluster_seed) {
  const auto clips = read_corpus_jsonl(corpus);
  const int n = static_cast<int>(clips.size());
  fs::create_directories(out_dir);

  SceneGroups groups;
  std::vector<TrainResult> results;
  if (k > 0) {
    groups = cluster_corpus(clips, k, cluster_seed);
    results = train_groups(clips, groups, flags);
  } else {
    // scan k by the fitted weight objective on the training windows
    const int k_max = std::min(12, n);
    double best_obj = 0.0;
    int best_k = 0;
    for (int kk = 1; kk <= k_max; ++kk) {
      SceneGroups g = cluster_corpus(clips, kk, cluster_seed);
      std::vector<TrainResult> r = train_groups(clips, g, flags);
      std::vector<Checkpoint> ckpts;
      for (const auto& tr : r) ckpts.push_back(tr.checkpoint);
      const auto branches = collect_branches(clips, g, ckpts, ScoreOptions{});
      const double obj = corpus_objective(branches, nullptr);
      std::cout << "k=" << kk << " objective=" << obj << "\n";
      if (best_k == 0 || obj < best_obj - 1e-12) {
        best_k = kk;
        best_obj = obj;
        groups = std::move(g);
        results = std::move(r);
      }
    }
    std::cout << "selected k=" << best_k << "\n";
  }

  SceneModel model;
  model.groups = groups;
  save_scene_model(model, out_dir + "/groups.json");
  for (int g = 0; g < groups.k; ++g) {
    save_checkpoint(results[g].checkpoint, group_ckpt_path(out_dir, g));
    write_loss_csv(results[g].history, out_dir + "/loss_group_" + std::to_string(g) + ".csv");
    const auto& ck = results[g].checkpoint;
    std::cout << "group " << g << ": params " << param_count(ck.low) << "+"
              << param_count(ck.high) << ", final loss low " << ck.final_loss_low << " high "
              << ck.final_loss_high << "\n";
  }
  return 0;
}

int run_cluster(const std::string& corpus, const std::string& out, int k, uint64_t seed) {
  const auto clips = read_corpus_jsonl(corpus);
  SceneModel model;
  model.groups = cluster_corpus(clips, k, seed);
  save_scene_model(model, out);
  std::cout << "clustered " << clips.size() << " videos into " << k << " groups\n";
  return 0;
}

int run_fitweights(const std::string& corpus, const std::string& artifacts,
                   const std::string& out, const ScoreOptions& opts) {
  const auto clips = read_corpus_jsonl(corpus);
  SceneModel model = load_scene_model(artifacts + "/groups.json");
  const auto ckpts = load_group_checkpoints(artifacts, model.groups);
  const auto branches = collect_branches(clips, model.groups, ckpts, opts);
  model.scoring = opts;
  model.per_group.clear();
  const double obj = corpus_objective(branches, &model.per_group);
  save_scene_model(model, out);
  for (const auto& gw : model.per_group)
    std::cout << "group " << gw.group_id << ": W=(" << gw.weights.w[0] << ", "
              << gw.weights.w[1] << ", " << gw.weights.w[2] << ") objective "
              << gw.objective << "\n";
  std::cout << "corpus objective " << obj << "\n";
  return 0;
}

int run_score(const std::string& corpus, const std::string& artifacts,
              const std::string& weights, const std::string& out, int jobs) {
  const auto clips = read_corpus_jsonl(corpus);
  const SceneModel model = load_scene_model(weights);
  if (model.per_group.empty())
    throw FormatError("weights file has no fitted groups: " + weights);
  const auto ckpts = load_group_checkpoints(artifacts, model.groups);

  std::vector<ClipScores> all(clips.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < clips.size() && !failed; i = next.fetch_add(1)) {
      int g;
      if (const auto it = model.groups.assignment.find(clips[i].video_id);
          it != model.groups.assignment.end()) {
        g = it->second;
      } else {
        g = assign_group(clips[i], model.groups);
      }
      const GroupWeights* gw = nullptr;
      for (const auto& cand : model.per_group)
        if (cand.group_id == g) gw = &cand;
      if (!gw) {
        failed = true;
        return;
      }
      all[i] = score_clip(clips[i], ckpts[g], gw->weights, model.scoring);
    }
  };
  const int n_threads = std::max(1, jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed) throw FormatError("weights file is missing a group entry");
  write_scores_jsonl(all, out);
  size_t covered = 0;
  for (const auto& cs : all)
    for (const auto& f : cs.frames) covered += f.covered ? 1 : 0;
  std::cout << "scored " << covered << " frames across " << clips.size() << " clips -> " << out
            << "\n";
  return 0;
}

int run_eval(const std::string& corpus, const std::string& scores_path,
             const std::string& weights, bool ablation, const std::string& json_out,
             const std::string& csv_out) {
  const auto clips = read_corpus_jsonl(corpus);
  const auto scores = read_scores_jsonl(scores_path);
  const SceneModel model = load_scene_model(weights);
  const EvalReport rep = evaluate(clips, scores, model, ablation);

  std::printf("frame-level ROC AUC: %.4f  (%zu scored, %zu excluded, %zu positive)\n", rep.auc,
              rep.scored_frames, rep.excluded_frames, rep.positives);
  if (ablation) {
    std::printf("ablation (refit weights per subset):\n");
    const char* tags = "abcdefg";
    for (size_t i = 0; i < rep.ablation.size(); ++i)
      std::printf("  (%c) %-8s %.4f\n", tags[i], rep.ablation[i].subset.c_str(),
                  rep.ablation[i].auc);
  }
  if (!json_out.empty()) write_eval_json(rep, json_out);
  if (!csv_out.empty()) write_curve_csv(clips, scores, csv_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical skeleton-trajectory anomaly detection"};
  app.require_subcommand(1);

  std::string backend = "auto";
  app.add_option("--backend", backend, "kernel backend: auto|scalar|avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  // generate
  auto* gen = app.add_subcommand("generate", "write synthetic track corpora");
  gen->set_config("--config", "", "INI config file");
  std::string train_out, test_out;
  uint64_t gen_seed = 42;
  int frames = 210, train_dense = 5, train_sparse = 5, test_dense = 2, test_sparse = 2;
  bool single_person = false;
  std::vector<std::string> anomaly_names = {"speed-burst", "dispersal", "pose-collapse",
                                            "erratic-limbs"};
  gen->add_option("--train-out", train_out, "normal-only training corpus path");
  gen->add_option("--test-out", test_out, "mixed test corpus path");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--frames", frames, "frames per clip")->check(CLI::PositiveNumber);
  gen->add_option("--train-dense", train_dense, "dense training clips");
  gen->add_option("--train-sparse", train_sparse, "sparse training clips");
  gen->add_option("--test-dense", test_dense, "dense test clips");
  gen->add_option("--test-sparse", test_sparse, "sparse test clips");
  gen->add_option("--anomalies", anomaly_names, "anomaly types injected into the test corpus");
  gen->add_flag("--single-person", single_person, "force one person per sparse clip");

  // train
  auto* tr = app.add_subcommand("train", "cluster scenes and train per-group predictors");
  tr->set_config("--config", "", "INI config file");
  std::string tr_corpus, tr_out;
  int tr_k = 2;
  TrainFlags flags;
  uint64_t cluster_seed = 7;
  tr->add_option("--corpus", tr_corpus, "training corpus (JSONL)")->required();
  tr->add_option("--out-dir", tr_out, "artifact directory")->required();
  tr->add_option("--k", tr_k, "scene groups; 0 scans 1..min(12, n) by fitted objective");
  tr->add_option("--epochs", flags.cfg.epochs)->check(CLI::PositiveNumber);
  tr->add_option("--batch", flags.cfg.batch_size)->check(CLI::PositiveNumber);
  tr->add_option("--lr", flags.cfg.lr_max);
  tr->add_option("--momentum", flags.cfg.momentum);
  tr->add_option("--seed", flags.cfg.seed, "training seed");
  tr->add_option("--cluster-seed", cluster_seed);
  tr->add_option("--coord-scale", flags.coord_scale, "high-level coordinate scale");
  tr->add_flag("--binary-low-edges", flags.binary_low_edges,
               "unweighted skeleton edges instead of 1/dist^2");

  // cluster
  auto* cl = app.add_subcommand("cluster", "group videos by scene statistics");
  cl->set_config("--config", "", "INI config file");
  std::string cl_corpus, cl_out;
  int cl_k = 2;
  uint64_t cl_seed = 7;
  cl->add_option("--corpus", cl_corpus)->required();
  cl->add_option("--out", cl_out)->required();
  cl->add_option("--k", cl_k)->check(CLI::PositiveNumber);
  cl->add_option("--seed", cl_seed);

  // fitweights
  auto* fw = app.add_subcommand("fitweights", "fit per-group branch weights");
  fw->set_config("--config", "", "INI config file");
  std::string fw_corpus, fw_artifacts, fw_out;
  bool l3_signed = false, l1_window_mean = false;
  fw->add_option("--corpus", fw_corpus, "training corpus (JSONL)")->required();
  fw->add_option("--artifacts", fw_artifacts, "directory with groups.json and checkpoints")
      ->required();
  fw->add_option("--out", fw_out, "weights file")->required();
  fw->add_flag("--l3-signed", l3_signed, "use the signed motion-vector error");
  fw->add_flag("--l1-window-mean", l1_window_mean, "divide L1 by the window span");

  // score
  auto* sc = app.add_subcommand("score", "per-frame anomaly scores");
  sc->set_config("--config", "", "INI config file");
  std::string sc_corpus, sc_artifacts, sc_weights, sc_out;
  int jobs = 1;
  sc->add_option("--corpus", sc_corpus)->required();
  sc->add_option("--artifacts", sc_artifacts)->required();
  sc->add_option("--weights", sc_weights)->required();
  sc->add_option("--out", sc_out)->required();
  sc->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  // eval
  auto* ev = app.add_subcommand("eval", "frame-level ROC AUC report");
  ev->set_config("--config", "", "INI config file");
  std::string ev_corpus, ev_scores, ev_weights, ev_json, ev_csv;
  bool ablation = false;
  ev->add_option("--corpus", ev_corpus, "labeled corpus (JSONL)")->required();
  ev->add_option("--scores", ev_scores)->required();
  ev->add_option("--weights", ev_weights)->required();
  ev->add_flag("--ablation", ablation, "report AUC per branch subset");
  ev->add_option("--json-out", ev_json);
  ev->add_option("--csv-out", ev_csv);

  try {
    app.parse(argc, argv);
    if (backend == "scalar") kern::set_backend(kern::Backend::scalar);
    if (backend == "avx2") kern::set_backend(kern::Backend::avx2);

    if (*gen) {
      if (train_out.empty() && test_out.empty())
        throw UsageError("generate: need --train-out and/or --test-out");
      return run_generate(train_out, test_out, gen_seed, frames, train_dense, train_sparse,
                          test_dense, test_sparse, anomaly_names, single_person);
    }
    if (*tr) return run_train(tr_corpus, tr_out, tr_k, flags, cluster_seed);
    if (*cl) return run_cluster(cl_corpus, cl_out, cl_k, cl_seed);
    if (*fw) {
      ScoreOptions opts;
      opts.l3_absolute = !l3_signed;
      opts.l1_window_mean = l1_window_mean;
      return run_fitweights(fw_corpus, fw_artifacts, fw_out, opts);
    }
    if (*sc) return run_score(sc_corpus, sc_artifacts, sc_weights, sc_out, jobs);
    if (*ev) return run_eval(ev_corpus, ev_scores, ev_weights, ablation, ev_json, ev_csv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidK& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    // IoError, FormatError, Empty*, SingleClass, ShapeMismatch, DegeneratePose
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
