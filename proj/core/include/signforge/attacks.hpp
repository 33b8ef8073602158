#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/image.hpp"
#include "signforge/model.hpp"
#include "signforge/standard.hpp"

namespace signforge {

struct PatchSquare {
  int row = 0;
  int col = 0;
  int side = 0;
};

/// m square patches; pairwise disjoint and in-bounds.
struct PatchPlacement {
  std::vector<PatchSquare> squares;

  int total_area() const;
  bool contains(int y, int x) const;
  void validate(int h, int w) const;
};

struct AttackConfig {
  double coverage = 0.05;
  int m = 4;
  int stride = 2;
  RgbColor init_color = {0.5, 0.5, 0.5};
  int opt_steps = 30;
  double step_size = 8.0 / 255.0;
  bool bw_constraint = false;
  double epsilon_linf = 8.0 / 255.0;
  bool targeted = false;
  int universal_target = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static AttackConfig from_json(const nlohmann::json& j);
};

struct AttackOutcome {
  Image adversarial;
  bool success = false;  // prediction != label (untargeted)
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::optional<PatchPlacement> placement;
};

/// side = round(sqrt(coverage * H * W / m)), at least 1.
int patch_side(double coverage, int m, int h, int w);

/// Greedy sequential placement: for each of the m squares, pick the grid
/// position (row/col multiples of `stride`) that maximizes the model loss
/// with all previously chosen squares plus the candidate filled with
/// init_color, skipping overlaps; ties resolve to the smallest (row, col)
/// in row-major order.
PatchPlacement exhaustive_placement(Classifier& model, const Image& x, int label, int m, int side,
                                    int stride, const RgbColor& init_color);

/// Rectangular occlusion attack: m=1 placement followed by sign-gradient
/// ascent on the pixels inside the square.
AttackOutcome roa_attack(Classifier& model, const Image& x, int label, const AttackConfig& cfg);

/// m squares placed greedily, all patch pixels optimized jointly. With
/// bw_constraint, patch pixels are projected to {0,1} per channel.
AttackOutcome rp4_attack(Classifier& model, const Image& x, int label, const AttackConfig& cfg);

struct UniversalPatch {
  Image patch;  // side x side x 3
  int side = 0;
  int target_class = 0;
};

/// Position- and input-agnostic targeted patch trained over random images
/// and placements from `data`.
UniversalPatch universal_patch(Classifier& model, const LabeledImages& data, int target_class,
                               const AttackConfig& cfg, std::uint64_t seed);

/// Pastes the patch at (row, col), clipping to image bounds.
Image apply_patch_at(const Image& x, const Image& patch, int row, int col);

/// Projected sign-gradient ascent in the L-inf ball of radius epsilon.
AttackOutcome pgd_linf(Classifier& model, const Image& x, int label, double epsilon, int steps,
                       double step_size);

/// Registered attack ids: roa, rp4, universal, pgd, dorpatch (unimplemented).
const std::vector<std::string>& registered_attacks();

/// Dispatches a per-sample attack by id. "dorpatch" raises
/// NotImplementedError; "universal" requires the precomputed patch and is
/// dispatched by the evaluation layer instead.
AttackOutcome run_attack(const std::string& id, Classifier& model, const Image& x, int label,
                         const AttackConfig& cfg);

}  // namespace signforge
