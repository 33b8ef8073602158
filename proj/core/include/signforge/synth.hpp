#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/augment.hpp"
#include "signforge/image.hpp"
#include "signforge/scene.hpp"
#include "signforge/standard.hpp"

namespace signforge {

enum class Split { train, val, test };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// Rendered sign face. `color_tangent` is dface/dcolor: the per-pixel
/// pictogram weight, identical for each color channel.
struct SignFace {
  SignShape shape = SignShape::prohibitory_circle;
  Image rgb;            // res x res x 3
  Image alpha;          // res x res x 1, 1 inside the sign silhouette
  Image color_tangent;  // res x res x 1
};

/// Renders the sign face at the given resolution. The face is a
/// differentiable function of sign.color: dface[ch]/dcolor[ch] equals
/// color_tangent pointwise, cross-channel derivatives are zero.
SignFace render_sign(const SignClass& sign, int resolution);

/// Perspective-warps the face into the scene's placement quad and
/// alpha-composites it over the background. Tangent images (same raster as
/// the face, single channel) pass through the identical linear resampling.
Image embed_in_scene(const ContextScene& scene, const SignFace& face,
                     std::vector<Image>* embedded_tangents = nullptr);

struct SynthConfig {
  int scenes_per_type = 7;
  int augmented_per_base = 225;
  int test_scenes_per_type = 2;
  double val_fraction = 520.0 / 15750.0;
  int image_size = 48;
  std::uint64_t master_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SampleRecord {
  int index = 0;  // position in the manifest
  int label = 0;  // class_id, 1-based
  int scene_id = 0;
  bool flipped = false;
  AugmentationChain chain;
  std::uint64_t sample_seed = 0;
  Split split = Split::train;
  std::string image_ref;  // relative PNG path when materialized, else empty
};

struct DatasetManifest {
  SynthConfig config;
  std::string standard_name;
  std::vector<SampleRecord> records;

  int count(Split s) const;
  std::vector<int> indices(Split s) const;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

/// The instantiation operator: produces the manifest for I(S). Each class is
/// embedded into every scene variant of its matching type (2 * scenes_per_type
/// variants), with augmented_per_base augmented samples per base image.
/// Samples from reserved test scenes (the last test_scenes_per_type scene ids
/// per type, both flips) form the test split; the rest splits train/val by
/// val_fraction. Deterministic under config.master_seed.
DatasetManifest instantiate(const TrafficSignStandard& standard,
                            const std::vector<ContextScene>& scenes, const SynthConfig& config);

/// Renders one manifest record to pixels. If `color_tangents` is non-null it
/// receives three HxWx3 images: d(sample)/d(color channel k) of the sample's
/// own class color.
Image render_sample(const SampleRecord& record, const TrafficSignStandard& standard,
                    const std::vector<ContextScene>& scenes,
                    std::vector<Image>* color_tangents = nullptr);

/// Renders every record into memory, in manifest order.
std::vector<Image> render_all(const DatasetManifest& manifest,
                              const TrafficSignStandard& standard,
                              const std::vector<ContextScene>& scenes);

/// Writes manifest.json (+ images/ PNG previews when with_images) to out_dir.
void materialize(const DatasetManifest& manifest, const TrafficSignStandard& standard,
                 const std::vector<ContextScene>& scenes, const std::string& out_dir,
                 bool with_images);

DatasetManifest load_manifest(const std::string& path);

}  // namespace signforge
