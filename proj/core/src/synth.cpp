#include "signforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/png_io.hpp"
#include "signforge/warp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace signforge {

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split: " + s);
}

namespace {

constexpr double kRingRed[3] = {0.78, 0.05, 0.05};

double smooth_cov(double signed_dist) {
  // ~1px antialiasing: 1 inside, 0 outside
  return std::clamp(0.5 - signed_dist, 0.0, 1.0);
}

// signed distance to triangle boundary (negative inside)
double tri_sdf(double px, double py, const Point2 v[3]) {
  double min_edge = 1e30;
  bool any_pos = false, any_neg = false;
  for (int i = 0; i < 3; ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % 3];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len2 = ex * ex + ey * ey;
    double t = ((px - a.x) * ex + (py - a.y) * ey) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (a.x + t * ex), dy = py - (a.y + t * ey);
    min_edge = std::min(min_edge, std::sqrt(dx * dx + dy * dy));
    const double cross = ex * (py - a.y) - ey * (px - a.x);
    any_pos |= cross > 0;
    any_neg |= cross < 0;
  }
  const bool inside = !(any_pos && any_neg);  // winding-independent
  return inside ? -min_edge : min_edge;
}

}  // namespace

SignFace render_sign(const SignClass& sign, int resolution) {
  if (resolution < 16) throw ConfigError("render_sign: resolution must be >= 16");
  const Image& mask = sign.pictogram.alpha_mask;
  if (mask.h > resolution || mask.w > resolution)
    throw ConfigError("render_sign: pictogram mask larger than resolution");

  const double r = resolution;
  SignFace face;
  face.shape = sign.shape;
  face.rgb = Image(resolution, resolution, 3);
  face.alpha = Image(resolution, resolution, 1);
  face.color_tangent = Image(resolution, resolution, 1);

  // silhouette + border + white field
  double box_x0, box_y0, box_size;
  if (sign.shape == SignShape::prohibitory_circle) {
    const double c = (r - 1) / 2.0;
    const double ro = 0.48 * r, ri = 0.34 * r;
    for (int y = 0; y < resolution; ++y)
      for (int x = 0; x < resolution; ++x) {
        const double d = std::hypot(x - c, y - c);
        const double a = smooth_cov(d - ro);
        face.alpha.at(y, x, 0) = a;
        const double ring = smooth_cov(d - ro) * smooth_cov(ri - d);  // ri <= d <= ro
        for (int ch = 0; ch < 3; ++ch)
          face.rgb.at(y, x, ch) = (1 - ring) * 1.0 + ring * kRingRed[ch];
      }
    box_size = 0.60 * r;
    box_x0 = (r - box_size) / 2.0;
    box_y0 = (r - box_size) / 2.0;
  } else {
    const Point2 v[3] = {{0.5 * r, 0.06 * r}, {0.05 * r, 0.92 * r}, {0.95 * r, 0.92 * r}};
    const double border = 0.10 * r;
    for (int y = 0; y < resolution; ++y)
      for (int x = 0; x < resolution; ++x) {
        const double sd = tri_sdf(x, y, v);
        const double a = smooth_cov(sd);
        face.alpha.at(y, x, 0) = a;
        // band = 1 when -border <= sd <= 0
        const double in_band = smooth_cov(sd) * smooth_cov(-(sd + border));
        for (int ch = 0; ch < 3; ++ch)
          face.rgb.at(y, x, ch) = (1 - in_band) * 1.0 + in_band * kRingRed[ch];
      }
    // warning glyphs are drawn lower-center in their unit box; use the full face
    box_size = r;
    box_x0 = 0.0;
    box_y0 = 0.0;
  }

  // composite pictogram: face = face*(1-m) + color*m, tangent = m
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      if (x < box_x0 || y < box_y0 || x > box_x0 + box_size - 1 || y > box_y0 + box_size - 1)
        continue;
      const double mu = (x - box_x0) / (box_size - 1) * (mask.w - 1);
      const double mv = (y - box_y0) / (box_size - 1) * (mask.h - 1);
      const double m = mask.sample_bilinear(mv, mu, 0);
      if (m <= 0.0) continue;
      face.color_tangent.at(y, x, 0) = m;
      for (int ch = 0; ch < 3; ++ch)
        face.rgb.at(y, x, ch) = face.rgb.at(y, x, ch) * (1 - m) + sign.color[ch] * m;
    }
  return face;
}

Image embed_in_scene(const ContextScene& scene, const SignFace& face,
                     std::vector<Image>* embedded_tangents) {
  if (scene.scene_type != face.shape)
    throw ConfigError("embed_in_scene: sign shape incompatible with scene type");

  const Homography to_quad =
      Homography::raster_to_quad(face.rgb.w, face.rgb.h, scene.placement_quad);
  const Homography to_face = to_quad.inverse();

  Image out = scene.background;
  if (embedded_tangents) {
    embedded_tangents->assign(3, Image(out.h, out.w, 3, 0.0));
  }
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      const Point2 s = to_face.apply({static_cast<double>(x), static_cast<double>(y)});
      if (s.x < -0.5 || s.y < -0.5 || s.x > face.rgb.w - 0.5 || s.y > face.rgb.h - 0.5) continue;
      const double a = face.alpha.sample_bilinear(s.y, s.x, 0);
      if (a <= 0.0) continue;
      for (int ch = 0; ch < 3; ++ch)
        out.at(y, x, ch) =
            out.at(y, x, ch) * (1 - a) + face.rgb.sample_bilinear(s.y, s.x, ch) * a;
      if (embedded_tangents) {
        const double t = face.color_tangent.sample_bilinear(s.y, s.x, 0) * a;
        for (int k = 0; k < 3; ++k) (*embedded_tangents)[k].at(y, x, k) = t;
      }
    }
  return out;
}

void SynthConfig::validate() const {
  if (scenes_per_type < 1 || augmented_per_base < 1 || test_scenes_per_type < 1)
    throw ConfigError("synth config: counts must be positive");
  if (test_scenes_per_type >= scenes_per_type)
    throw ConfigError("synth config: test_scenes_per_type must be < scenes_per_type");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw ConfigError("synth config: val_fraction out of range");
  if (image_size < 16) throw ConfigError("synth config: image_size must be >= 16");
}

json SynthConfig::to_json() const {
  return json{{"scenes_per_type", scenes_per_type},
              {"augmented_per_base", augmented_per_base},
              {"test_scenes_per_type", test_scenes_per_type},
              {"val_fraction", val_fraction},
              {"image_size", image_size},
              {"master_seed", master_seed}};
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  c.scenes_per_type = j.value("scenes_per_type", c.scenes_per_type);
  c.augmented_per_base = j.value("augmented_per_base", c.augmented_per_base);
  c.test_scenes_per_type = j.value("test_scenes_per_type", c.test_scenes_per_type);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.image_size = j.value("image_size", c.image_size);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.validate();
  return c;
}

int DatasetManifest::count(Split s) const {
  int n = 0;
  for (const auto& r : records) n += (r.split == s);
  return n;
}

std::vector<int> DatasetManifest::indices(Split s) const {
  std::vector<int> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(r.index);
  return out;
}

json DatasetManifest::to_json() const {
  json recs = json::array();
  for (const auto& r : records)
    recs.push_back(json{{"index", r.index},
                        {"label", r.label},
                        {"scene_id", r.scene_id},
                        {"flipped", r.flipped},
                        {"chain", r.chain.to_json()},
                        {"sample_seed", r.sample_seed},
                        {"split", to_string(r.split)},
                        {"image_ref", r.image_ref}});
  return json{{"config", config.to_json()}, {"standard_name", standard_name}, {"records", recs}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  DatasetManifest m;
  m.config = SynthConfig::from_json(j.at("config"));
  m.standard_name = j.value("standard_name", "");
  for (const auto& jr : j.at("records")) {
    SampleRecord r;
    r.index = jr.at("index").get<int>();
    r.label = jr.at("label").get<int>();
    r.scene_id = jr.at("scene_id").get<int>();
    r.flipped = jr.at("flipped").get<bool>();
    r.chain = AugmentationChain::from_json(jr.at("chain"));
    r.sample_seed = jr.at("sample_seed").get<std::uint64_t>();
    r.split = split_from_string(jr.at("split").get<std::string>());
    r.image_ref = jr.value("image_ref", "");
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest instantiate(const TrafficSignStandard& standard,
                            const std::vector<ContextScene>& scenes, const SynthConfig& config) {
  config.validate();
  standard.validate();

  std::map<SignShape, std::set<int>> scene_ids_by_type;
  for (const auto& s : scenes) scene_ids_by_type[s.scene_type].insert(s.scene_id);
  if (scene_ids_by_type.size() < 2)
    throw ConfigError("instantiate: scenes must cover both sign types");

  // reserve the last test_scenes_per_type scene ids of each type
  std::set<int> test_scenes;
  for (auto& [type, ids] : scene_ids_by_type) {
    if (static_cast<int>(ids.size()) <= config.test_scenes_per_type)
      throw ConfigError("instantiate: not enough scenes for the reserved test set");
    auto it = ids.rbegin();
    for (int k = 0; k < config.test_scenes_per_type; ++k) test_scenes.insert(*it++);
  }

  DatasetManifest m;
  m.config = config;
  m.standard_name = standard.name;

  for (const auto& cls : standard.classes) {
    // scene variants of the matching type, ordered (scene_id, flipped)
    std::vector<const ContextScene*> compatible;
    for (const auto& s : scenes)
      if (s.scene_type == cls.shape) compatible.push_back(&s);
    std::sort(compatible.begin(), compatible.end(), [](const ContextScene* a, const ContextScene* b) {
      return std::tie(a->scene_id, a->flipped) < std::tie(b->scene_id, b->flipped);
    });
    for (const ContextScene* sc : compatible) {
      for (int k = 0; k < config.augmented_per_base; ++k) {
        SampleRecord r;
        r.index = static_cast<int>(m.records.size());
        r.label = cls.class_id;
        r.scene_id = sc->scene_id;
        r.flipped = sc->flipped;
        r.sample_seed = derive_seed(config.master_seed,
                                    {static_cast<std::uint64_t>(cls.class_id),
                                     static_cast<std::uint64_t>(sc->scene_id),
                                     static_cast<std::uint64_t>(sc->flipped ? 1 : 0),
                                     static_cast<std::uint64_t>(k)});
        Rng rng(r.sample_seed);
        r.chain = sample_chain(rng);
        r.split = test_scenes.count(sc->scene_id) ? Split::test : Split::train;
        m.records.push_back(std::move(r));
      }
    }
  }

  // deterministic val selection among non-test records
  std::vector<int> non_test;
  for (const auto& r : m.records)
    if (r.split != Split::test) non_test.push_back(r.index);
  const int val_count =
      static_cast<int>(std::lround(config.val_fraction * static_cast<double>(non_test.size())));
  std::sort(non_test.begin(), non_test.end(), [&](int a, int b) {
    const auto ka = derive_seed(m.records[a].sample_seed, {0x56414CULL});
    const auto kb = derive_seed(m.records[b].sample_seed, {0x56414CULL});
    return std::tie(ka, a) < std::tie(kb, b);
  });
  for (int i = 0; i < val_count && i < static_cast<int>(non_test.size()); ++i)
    m.records[non_test[i]].split = Split::val;

  return m;
}

Image render_sample(const SampleRecord& record, const TrafficSignStandard& standard,
                    const std::vector<ContextScene>& scenes,
                    std::vector<Image>* color_tangents) {
  const ContextScene* scene = nullptr;
  for (const auto& s : scenes)
    if (s.scene_id == record.scene_id && s.flipped == record.flipped) {
      scene = &s;
      break;
    }
  if (!scene) throw ConfigError("render_sample: scene variant not found");

  const SignClass& cls = standard.sign_class(record.label);
  const SignFace face = render_sign(cls, scene->background.h);
  Image img = embed_in_scene(*scene, face, color_tangents);
  if (color_tangents)
    img = apply_chain_with_tangents(img, record.chain, *color_tangents);
  else
    img = apply_chain(img, record.chain);
  img.clip01();
  return img;
}

std::vector<Image> render_all(const DatasetManifest& manifest,
                              const TrafficSignStandard& standard,
                              const std::vector<ContextScene>& scenes) {
  std::vector<Image> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) out.push_back(render_sample(r, standard, scenes));
  return out;
}

void materialize(const DatasetManifest& manifest, const TrafficSignStandard& standard,
                 const std::vector<ContextScene>& scenes, const std::string& out_dir,
                 bool with_images) {
  fs::create_directories(out_dir);
  DatasetManifest m = manifest;
  if (with_images) {
    fs::create_directories(fs::path(out_dir) / "images");
    for (auto& r : m.records) {
      r.image_ref = "images/sample_" + std::to_string(r.index) + ".png";
      write_png(render_sample(r, standard, scenes), (fs::path(out_dir) / r.image_ref).string());
    }
  }
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + out_dir);
  out << m.to_json().dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + path + ": " + e.what());
  }
  return DatasetManifest::from_json(j);
}

}  // namespace signforge
