#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/attacks.hpp"
#include "signforge/model.hpp"
#include "signforge/optimize.hpp"
#include "signforge/scene.hpp"
#include "signforge/synth.hpp"

namespace signforge {

/// One hashable document configuring every stage. Defaults are the desk
/// profile; paper_scale restores the full-scale protocol parameters.
struct RunConfig {
  std::uint64_t master_seed = 7;
  std::string output_dir = "runs/default";
  bool paper_scale = false;

  SceneConfig scene;
  SynthConfig synth;
  TrainConfig train;
  AttackConfig eval_attack;   // patch attack driving robust evaluation
  AttackConfig inner_attack;  // ROA used inside adversarial training
  PictogramSearchConfig search;
  ColorOptConfig color;

  Architecture architecture = Architecture::small_conv;
  Architecture transfer_architecture = Architecture::resnet_like;
  int pretrain_epochs = -1;  // -1: train.phase1_epochs
  int search_phase1_epochs = -1;  // reduced budgets for candidate scoring
  int search_phase2_epochs = -1;
  int eval_cap = 200;
  std::vector<double> sweep_coverages = {0.02, 0.05, 0.08};
  std::vector<std::string> sweep_attacks = {"roa", "rp4", "universal"};

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  /// Hash of the canonical JSON form.
  std::string hash() const;

  /// Full-scale protocol: 7 scenes/type, 225 augmentations/base, T=400,
  /// 10 restarts, 5 runs per candidate.
  void apply_paper_scale();

  OptimizeDeps make_deps(const std::vector<ContextScene>& scenes) const;
};

/// Desk profile sized to finish on a single CPU core.
RunConfig desk_config();

}  // namespace signforge
