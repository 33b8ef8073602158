#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/image.hpp"
#include "signforge/rng.hpp"

namespace signforge {

struct AugmentationStep {
  std::string id;
  std::vector<double> params;
  std::uint64_t noise_seed = 0;  // consumed by stochastic ops (gaussian_noise)
};

/// Ordered list of up to eight augmentation steps.
struct AugmentationChain {
  std::vector<AugmentationStep> steps;

  void validate() const;
  nlohmann::json to_json() const;
  static AugmentationChain from_json(const nlohmann::json& j);
};

/// The ids of the 15 registered differentiable augmentations, in registry order.
const std::vector<std::string>& registered_augmentations();

///// Draws a chain: length uniform in {1..8}, ops without replacement,
/// parameters from each op's documented range.
AugmentationChain sample_chain(Rng& rng);

/// Applies the chain; the output is clipped into [0,1] after every step.
Image apply_chain(const Image& image, const AugmentationChain& chain);

/// Same, but also pushes tangent images (directional derivatives of the
/// input with respect to upstream scalars) through every step. Values are
/// clipped after each step and tangents zeroed at clipped pixels.
Image apply_chain_with_tangents(const Image& image, const AugmentationChain& chain,
                                std::vector<Image>& tangents);

}  // namespace signforge
