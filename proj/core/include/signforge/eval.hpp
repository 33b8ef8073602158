#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/attacks.hpp"
#include "signforge/model.hpp"
#include "signforge/optimize.hpp"

namespace signforge {

struct EvalReport {
  double benign_accuracy = 0.0;
  double robust_accuracy = 0.0;
  std::vector<double> per_class_benign;  // indexed class_id - 1
  std::vector<double> per_class_robust;
  std::string attack_hash;
  std::string model_hash;
  int sample_count = 0;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const;
};

std::string model_config_hash(const Classifier& model);

/// Attacks up to sample_cap samples (cap <= 0: the whole split) and reports
/// accuracy on the adversarial inputs; a benign miss counts as attack
/// success. `patch` is required for the universal attack; `seed` drives its
/// random placements. Raises NotImplementedError for "dorpatch".
EvalReport robust_accuracy(Classifier& model, const LabeledImages& split,
                           const std::string& attack_id, const AttackConfig& cfg,
                           int sample_cap = 200, const UniversalPatch* patch = nullptr,
                           std::uint64_t seed = 0);

// ---------------------------------------------------------------- sweeps

struct SweepRow {
  std::string attack;
  double coverage = 0.0;
  double robust = 0.0;
  double success = 0.0;  // attack success rate = 1 - robust
};

struct SweepTable {
  std::vector<SweepRow> rows;

  void save_csv(const std::string& path) const;
  static SweepTable load_csv(const std::string& path);
};

/// Robust accuracy per (attack, coverage). Universal patches are trained
/// per coverage on the split itself. Coverages must be sorted ascending.
SweepTable attack_sweep(Classifier& model, const LabeledImages& split,
                        const std::vector<std::string>& attacks,
                        const std::vector<double>& coverages, const AttackConfig& base_cfg,
                        int sample_cap, std::uint64_t seed);

/// Line plot of robust accuracy vs coverage, one series per attack; a pure
/// function of the table.
void plot_sweep(const SweepTable& table, const std::string& png_path);

// ------------------------------------------------- optimized-class sweep

struct KSweepRow {
  int k = 0;
  std::string init;  // "static_gray" or "random"
  double benign = 0.0;
  double robust = 0.0;
};

struct KSweepTable {
  std::vector<KSweepRow> rows;

  /// Requires one row per (k, init) for k = 0..n and both inits.
  void validate_complete(int n) const;
  void save_csv(const std::string& path) const;
  static KSweepTable load_csv(const std::string& path);
};

void plot_k_sweep(const KSweepTable& table, const std::string& png_path);

// ---------------------------------------------------------------- transfer

struct TransferRow {
  std::string architecture;
  std::string standard;  // "original" or "optimized"
  double benign = 0.0;
  double robust = 0.0;
};

/// Trains each architecture from scratch (standard + adversarial phases) on
/// both standards and reports val-split accuracies; two rows per
/// architecture.
std::vector<TransferRow> transfer_eval(const TrafficSignStandard& original,
                                       const TrafficSignStandard& optimized,
                                       const std::vector<Architecture>& architectures,
                                       const OptimizeDeps& deps, int sample_cap,
                                       std::uint64_t seed);

void save_transfer_csv(const std::vector<TransferRow>& rows, const std::string& path);

}  // namespace signforge
