#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/attacks.hpp"
#include "signforge/model.hpp"
#include "signforge/standard.hpp"
#include "signforge/synth.hpp"

namespace signforge {

// ------------------------------------------------------- pictogram search

struct PictogramSearchConfig {
  int runs_per_candidate = 5;
  enum class Order { random, worst_first } class_order = Order::random;
  AttackConfig eval_attack;  // default: rp4 with m=4 @ 5%
  std::uint64_t seed = 0;

  void validate() const;
};

/// Robust accuracy of one adversarial-training run on `standard` (which has
/// candidate `cand_idx` substituted into class `class_id`).
using CandidateEvaluator = std::function<double(const TrafficSignStandard& standard, int class_id,
                                                int cand_idx, std::uint64_t run_seed)>;

struct GreedyTraceEntry {
  int class_id = 0;
  int candidate = 0;
  std::vector<double> run_accuracies;
  double mean_accuracy = 0.0;
};

struct GreedyResult {
  TrafficSignStandard standard;
  std::vector<GreedyTraceEntry> trace;
  std::vector<int> chosen;  // candidate index per visited class, visit order
  std::vector<int> class_visit_order;
  int runs_executed = 0;
};

/// Greedy per-class pictogram selection over the candidate pool. Classes are
/// visited in `class_order`; for each class every pool candidate is evaluated
/// runs_per_candidate times and the argmax-mean candidate (ties: lowest
/// index) is fixed before moving on.
GreedyResult greedy_pictogram_search(const TrafficSignStandard& standard,
                                     const PictogramPool& pool,
                                     const std::vector<int>& class_order,
                                     const PictogramSearchConfig& cfg,
                                     const CandidateEvaluator& evaluate);

// ----------------------------------------------------- color optimization

struct ColorOptConfig {
  int iterations = 400;  // T
  double epoch_fraction = 0.25;
  double alpha = 0.01;
  enum class Init { static_gray, random } init = Init::static_gray;
  int restarts = 10;
  std::uint64_t seed = 0;
  int adv_batch = 16;       // class-i samples attacked per iteration
  int eval_samples = 64;    // robust-eval cap for restart selection
  int eval_every = 0;       // 0: only final eval per restart
  std::vector<int> class_subset;  // empty: all classes

  void validate() const;
};

struct ColorSnapshot {
  int t = 0;
  int class_id = 0;
  std::array<double, 3> gradient{};
  std::vector<std::array<double, 3>> colors;  // all classes, after the update
  double batch_loss = 0.0;
  bool skipped = false;  // attack failed on every class sample
};

struct PeriodicEval {
  int t = 0;
  double benign = 0.0;
  double robust = 0.0;
};

struct RestartTrace {
  std::uint64_t seed = 0;
  std::vector<std::array<double, 3>> init_colors;  // all classes, before t=1
  std::vector<ColorSnapshot> snapshots;
  std::vector<PeriodicEval> evals;
  double final_benign = 0.0;
  double final_robust = 0.0;
  std::vector<std::array<double, 3>> final_colors;
};

struct ColorOptResult {
  TrafficSignStandard standard;  // colors of the winning restart
  Eigen::VectorXd model_params;  // winning restart's model parameters
  Architecture arch = Architecture::small_conv;
  int image_size = 48;
  int chosen_restart = 0;
  std::vector<RestartTrace> restarts;

  Classifier rebuild_model(int n_classes) const;
};

/// Everything the training-in-the-loop needs.
struct OptimizeDeps {
  const std::vector<ContextScene>* scenes = nullptr;
  SynthConfig synth_cfg;
  TrainConfig train_cfg;
  AttackConfig eval_attack;       // adversarial-example generator + robust eval
  AttackConfig inner_attack_cfg;  // ROA config for adversarial training batches
  Architecture arch = Architecture::small_conv;
  int pretrain_epochs = -1;  // -1: train_cfg.phase1_epochs
  // Reduced budgets for the many candidate-scoring runs (-1: train_cfg value).
  int search_phase1_epochs = -1;
  int search_phase2_epochs = -1;
};

/// Builds the batch-level ROA inner attack used by adversarial training.
InnerAttack make_roa_inner_attack(const AttackConfig& cfg);

/// Builds the real candidate evaluator: substitute, instantiate, train
/// (standard + DOA), then measure robust accuracy under cfg.eval_attack.
CandidateEvaluator make_training_evaluator(const OptimizeDeps& deps,
                                           const AttackConfig& eval_attack, int eval_samples);

/// The sign-gradient color loop with restarts; returns the restart whose
/// final model has the highest robust accuracy (ties: lowest index).
ColorOptResult color_optimize(const TrafficSignStandard& standard, const ColorOptConfig& cfg,
                              const OptimizeDeps& deps);

// ------------------------------------------------------------ full driver

struct OptimizeStandardResult {
  TrafficSignStandard standard;
  GreedyResult greedy;
  ColorOptResult colors;
};

/// Greedy pictogram selection followed by color optimization, restricted to
/// the first `k` classes (k = 0 leaves the standard untouched).
OptimizeStandardResult optimize_standard(const TrafficSignStandard& standard,
                                         const PictogramPool& pool, int k,
                                         const PictogramSearchConfig& search_cfg,
                                         const ColorOptConfig& color_cfg,
                                         const OptimizeDeps& deps);

/// Color-assignment baselines: i.i.d. uniform colors, or a seed-determined
/// permutation of the binary RGB colors excluding white.
TrafficSignStandard baseline_colors(const TrafficSignStandard& standard,
                                    const std::string& mode, std::uint64_t seed);

nlohmann::json trace_to_json(const RestartTrace& trace);
nlohmann::json greedy_trace_to_json(const GreedyResult& result);

}  // namespace signforge
