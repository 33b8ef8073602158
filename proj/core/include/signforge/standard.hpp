#pragma once

#include <map>
#include <string>
#include <vector>

#include "signforge/image.hpp"

namespace signforge {

/// RGB color with channels clipped into [0,1].
struct RgbColor {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  /// Component-wise clip into [0,1].
  RgbColor clipped() const;
  double operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
  double& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
  bool almost_equal(const RgbColor& o, double tol = 1e-9) const;
};

enum class PictogramSource { builtin, file };

/// Alpha mask defining the shape of the symbol inside a sign face.
/// Mask values live on the 8-bit grid (k/255) so that PNG persistence
/// round-trips exactly.
struct Pictogram {
  std::string id;
  Image alpha_mask;  // HxWx1, values in [0,1]
  std::string display_name;
  PictogramSource source = PictogramSource::builtin;

  void validate(int max_resolution = 0) const;
};

enum class SignShape { prohibitory_circle, warning_triangle };

std::string to_string(SignShape s);
SignShape sign_shape_from_string(const std::string& s);

struct SignClass {
  int class_id = 0;  // 1-based
  SignShape shape = SignShape::prohibitory_circle;
  Pictogram pictogram;
  RgbColor color;
};

/// A traffic-sign standard: the optimizable object. Immutable value
/// semantics; mutation helpers return modified copies.
struct TrafficSignStandard {
  std::string name;
  std::string version;
  std::vector<SignClass> classes;  // class_ids contiguous 1..n

  int n_classes() const { return static_cast<int>(classes.size()); }
  const SignClass& sign_class(int class_id) const;

  void validate() const;
};

/// Candidate pictograms per class, indexed 1..m.
struct PictogramPool {
  std::map<int, std::vector<Pictogram>> candidates;

  int pool_size(int class_id) const;
  const Pictogram& candidate(int class_id, int index_1based) const;
  void validate() const;
};

/// Loads a standard from a JSON manifest; mask PNGs are resolved relative
/// to the manifest's directory.
TrafficSignStandard load_standard(const std::string& path);

/// Writes the JSON manifest plus one grayscale PNG per pictogram mask.
/// load_standard inverts it (colors within 1e-9, masks exactly).
void save_standard(const TrafficSignStandard& standard, const std::string& path);

PictogramPool load_pool(const std::string& path);
void save_pool(const PictogramPool& pool, const std::string& path);

/// Returns a copy with class `class_id`'s color set to clip(color).
TrafficSignStandard set_color(const TrafficSignStandard& standard, int class_id,
                              const RgbColor& color);

/// Returns a copy with class `class_id`'s pictogram replaced by
/// pool[class_id][candidate_index] (1-based).
TrafficSignStandard set_pictogram(const TrafficSignStandard& standard, int class_id,
                                  int candidate_index, const PictogramPool& pool);

/// The built-in seven-class standard: four prohibitory and three warning
/// signs, all pictogram colors black.
TrafficSignStandard builtin_standard();

/// Built-in candidate pools: five alternatives per class (the original
/// pictogram is not part of the pool).
PictogramPool builtin_pool();

/// One procedurally drawn mask. glyph ids are "<class>_<variant>" with
/// variant 0 the original. Resolution is the mask side length.
Pictogram builtin_pictogram(int class_id, int variant, int resolution = 24);

}  // namespace signforge
