#pragma once

#include <cstdint>
#include <vector>

#include "signforge/image.hpp"
#include "signforge/standard.hpp"
#include "signforge/warp.hpp"

namespace signforge {

/// A procedurally generated background with a perspectived placement quad
/// for the sign face. scene_type constrains which classes may be embedded.
struct ContextScene {
  int scene_id = 0;
  Image background;  // HxWx3 in [0,1]
  Quad placement_quad;
  SignShape scene_type = SignShape::prohibitory_circle;
  bool flipped = false;
};

struct SceneConfig {
  int scenes_per_type = 7;
  int image_size = 48;
};

/// Generates 2 * scenes_per_type scenes (half per type), each also emitted
/// as a horizontally flipped variant: 4 * scenes_per_type entries in total.
/// Bit-identical for identical seeds.
std::vector<ContextScene> generate_scenes(const SceneConfig& config, std::uint64_t seed);

}  // namespace signforge
