#include <doctest.h>

#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/rng.hpp"
#include "signforge/synth.hpp"

using namespace signforge;
namespace fs = std::filesystem;

namespace {

SynthConfig desk_synth(std::uint64_t seed = 11) {
  SynthConfig c;
  c.scenes_per_type = 2;
  c.augmented_per_base = 3;
  c.test_scenes_per_type = 1;
  c.val_fraction = 0.2;
  c.image_size = 48;
  c.master_seed = seed;
  return c;
}

}  // namespace

TEST_CASE("paper-scale manifest reproduces the published counts") {
  const TrafficSignStandard standard = builtin_standard();
  SynthConfig cfg;  // paper defaults: 7 scenes/type, 225 aug, 2 test scenes
  cfg.master_seed = 3;
  const auto scenes = generate_scenes({cfg.scenes_per_type, cfg.image_size}, 3);
  const DatasetManifest m = instantiate(standard, scenes, cfg);

  CHECK(m.records.size() == 22050);
  CHECK(m.count(Split::test) == 6300);
  CHECK(m.count(Split::val) == 520);
  CHECK(m.count(Split::train) == 15230);

  std::set<std::tuple<int, int, bool>> bases;
  for (const auto& r : m.records) bases.insert({r.label, r.scene_id, r.flipped});
  CHECK(bases.size() == 98);  // 7 classes x 14 compatible scene variants
}

TEST_CASE("count law holds at desk scale") {
  const TrafficSignStandard standard = builtin_standard();
  const SynthConfig cfg = desk_synth();
  const auto scenes = generate_scenes({cfg.scenes_per_type, cfg.image_size}, 11);
  const DatasetManifest m = instantiate(standard, scenes, cfg);

  const int n = standard.n_classes();
  const int per_class_bases = 2 * cfg.scenes_per_type;  // both flips of matching scenes
  CHECK(static_cast<int>(m.records.size()) == n * per_class_bases * cfg.augmented_per_base);
  const int test = n * 2 * cfg.test_scenes_per_type * cfg.augmented_per_base;
  CHECK(m.count(Split::test) == test);
  const int non_test = static_cast<int>(m.records.size()) - test;
  const int val = static_cast<int>(std::lround(cfg.val_fraction * non_test));
  CHECK(m.count(Split::val) == val);
  CHECK(m.count(Split::train) == non_test - val);
}

TEST_CASE("splits partition the records and respect reserved test scenes") {
  const TrafficSignStandard standard = builtin_standard();
  const SynthConfig cfg = desk_synth();
  const auto scenes = generate_scenes({cfg.scenes_per_type, cfg.image_size}, 11);
  const DatasetManifest m = instantiate(standard, scenes, cfg);

  std::set<int> test_scene_ids;
  for (const auto& r : m.records)
    if (r.split == Split::test) test_scene_ids.insert(r.scene_id);
  for (const auto& r : m.records) {
    if (r.split != Split::test) CHECK(!test_scene_ids.count(r.scene_id));
  }
  CHECK(m.count(Split::train) + m.count(Split::val) + m.count(Split::test) ==
        static_cast<int>(m.records.size()));
}

TEST_CASE("instantiation and rendering are deterministic under the seed") {
  const TrafficSignStandard standard = builtin_standard();
  const SynthConfig cfg = desk_synth();
  const auto scenes = generate_scenes({cfg.scenes_per_type, cfg.image_size}, 11);
  const DatasetManifest a = instantiate(standard, scenes, cfg);
  const DatasetManifest b = instantiate(standard, scenes, cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); i += 17) {
    CHECK(a.records[i].sample_seed == b.records[i].sample_seed);
    const Image ia = render_sample(a.records[i], standard, scenes);
    const Image ib = render_sample(b.records[i], standard, scenes);
    CHECK(ia.max_abs_diff(ib) == 0.0);
  }
  SynthConfig other = cfg;
  other.master_seed += 1;
  const DatasetManifest c = instantiate(standard, scenes, other);
  bool any_diff = false;
  for (size_t i = 0; i < a.records.size(); ++i)
    any_diff |= a.records[i].sample_seed != c.records[i].sample_seed;
  CHECK(any_diff);
}

TEST_CASE("render_sign produces a differentiable pictogram tangent") {
  const TrafficSignStandard standard = builtin_standard();
  for (int cid : {1, 5}) {
    const SignFace face = render_sign(standard.sign_class(cid), 48);
    REQUIRE(face.rgb.h == 48);
    double tangent_mass = 0.0;
    for (int i = 0; i < face.color_tangent.size(); ++i) tangent_mass += face.color_tangent.data[i];
    CHECK(tangent_mass > 0.0);

    // face(color + h) - face(color) == h * tangent, exactly (linear in color)
    SignClass shifted = standard.sign_class(cid);
    const double h = 0.125;
    shifted.color = {h, 0.0, 0.0};
    const SignFace face2 = render_sign(shifted, 48);
    for (int y = 0; y < 48; y += 5)
      for (int x = 0; x < 48; x += 5) {
        const double expect = face.rgb.at(y, x, 0) + h * face.color_tangent.at(y, x, 0);
        CHECK(face2.rgb.at(y, x, 0) == doctest::Approx(expect).epsilon(1e-12));
      }
  }
  CHECK_THROWS_AS(render_sign(builtin_standard().sign_class(1), 8), ConfigError);
}

TEST_CASE("embed rejects incompatible scene types") {
  const TrafficSignStandard standard = builtin_standard();
  const auto scenes = generate_scenes({2, 48}, 11);
  const SignFace circle = render_sign(standard.sign_class(1), 24);
  for (const auto& s : scenes) {
    if (s.scene_type != SignShape::prohibitory_circle) {
      CHECK_THROWS_AS(embed_in_scene(s, circle), ConfigError);
      break;
    }
  }
}

TEST_CASE("color tangents through the full render chain match finite differences") {
  // interior colors keep the probes away from the hard zero/one clips
  TrafficSignStandard standard = builtin_standard();
  for (int cid = 1; cid <= standard.n_classes(); ++cid)
    standard = set_color(standard, cid, {0.3 + 0.04 * cid, 0.5, 0.7 - 0.04 * cid});
  const SynthConfig cfg = desk_synth(21);
  const auto scenes = generate_scenes({cfg.scenes_per_type, cfg.image_size}, 21);
  const DatasetManifest m = instantiate(standard, scenes, cfg);

  int checked = 0;
  long probes = 0;
  for (size_t i = 0; i < m.records.size() && checked < 6; i += 13, ++checked) {
    const SampleRecord& rec = m.records[i];
    std::vector<Image> tangents;
    const Image base = render_sample(rec, standard, scenes, &tangents);
    REQUIRE(tangents.size() == 3);

    const double h = 1e-3;
    for (int ch = 0; ch < 3; ++ch) {
      RgbColor cp = standard.sign_class(rec.label).color;
      RgbColor cm = cp;
      cp[ch] += h;
      cm[ch] -= h;
      const Image ip = render_sample(rec, set_color(standard, rec.label, cp), scenes);
      const Image im = render_sample(rec, set_color(standard, rec.label, cm), scenes);
      for (int k = 0; k < base.size(); k += 7) {
        const double fd_plus = (ip.data[k] - base.data[k]) / h;
        const double fd_minus = (base.data[k] - im.data[k]) / h;
        // one-sided diffs disagreeing means the probe straddles a clip or
        // other kink; the derivative is only defined away from those
        if (std::abs(fd_plus - fd_minus) >
            1e-3 * std::max({std::abs(fd_plus), std::abs(fd_minus), 1.0}))
          continue;
        const double fd = 0.5 * (fd_plus + fd_minus);
        const double an = tangents[static_cast<size_t>(ch)].data[k];
        if (std::abs(an) < 1e-6 && std::abs(fd) < 1e-6) continue;
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
        CHECK(rel < 1e-2);
        ++probes;
      }
    }
  }
  CHECK(checked == 6);
  CHECK(probes > 100);
}

TEST_CASE("manifest json round-trip and materialize") {
  const TrafficSignStandard standard = builtin_standard();
  const SynthConfig cfg = desk_synth();
  const auto scenes = generate_scenes({cfg.scenes_per_type, cfg.image_size}, 11);
  const DatasetManifest m = instantiate(standard, scenes, cfg);
  const DatasetManifest back = DatasetManifest::from_json(m.to_json());
  REQUIRE(back.records.size() == m.records.size());
  for (size_t i = 0; i < m.records.size(); i += 23) {
    CHECK(back.records[i].sample_seed == m.records[i].sample_seed);
    CHECK(back.records[i].label == m.records[i].label);
    CHECK(back.records[i].split == m.records[i].split);
    CHECK(back.records[i].chain.steps.size() == m.records[i].chain.steps.size());
  }

  const fs::path dir = fs::temp_directory_path() / "signforge_tests" / "mat";
  fs::remove_all(dir);
  materialize(m, standard, scenes, dir.string(), false);
  const DatasetManifest loaded = load_manifest((dir / "manifest.json").string());
  CHECK(loaded.records.size() == m.records.size());
}
