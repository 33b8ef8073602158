#include <doctest.h>

#include <filesystem>

#include "signforge/errors.hpp"
#include "signforge/standard.hpp"

using namespace signforge;
namespace fs = std::filesystem;

TEST_CASE("builtin standard: seven classes, valid, black colors") {
  const TrafficSignStandard s = builtin_standard();
  REQUIRE(s.n_classes() == 7);
  CHECK_NOTHROW(s.validate());
  int circles = 0, triangles = 0;
  for (const auto& c : s.classes) {
    (c.shape == SignShape::prohibitory_circle ? circles : triangles)++;
    CHECK(c.color.almost_equal({0, 0, 0}));
  }
  CHECK(circles == 4);
  CHECK(triangles == 3);
}

TEST_CASE("builtin pool has five candidates per class, distinct from originals") {
  const PictogramPool pool = builtin_pool();
  const TrafficSignStandard s = builtin_standard();
  CHECK_NOTHROW(pool.validate());
  for (const auto& c : s.classes) {
    REQUIRE(pool.pool_size(c.class_id) == 5);
    for (int j = 1; j <= 5; ++j)
      CHECK(pool.candidate(c.class_id, j).id != c.pictogram.id);
  }
}

TEST_CASE("standard save/load round-trip") {
  const TrafficSignStandard s = builtin_standard();
  const fs::path dir = fs::temp_directory_path() / "signforge_tests" / "std_rt";
  fs::remove_all(dir);
  save_standard(s, (dir / "standard.json").string());
  const TrafficSignStandard back = load_standard((dir / "standard.json").string());
  REQUIRE(back.n_classes() == s.n_classes());
  for (int cid = 1; cid <= s.n_classes(); ++cid) {
    const auto& a = s.sign_class(cid);
    const auto& b = back.sign_class(cid);
    CHECK(a.shape == b.shape);
    CHECK(a.color.almost_equal(b.color));
    CHECK(a.pictogram.id == b.pictogram.id);
    CHECK(a.pictogram.alpha_mask.max_abs_diff(b.pictogram.alpha_mask) == 0.0);  // exact masks
  }
}

TEST_CASE("pool save/load round-trip") {
  const PictogramPool pool = builtin_pool();
  const fs::path dir = fs::temp_directory_path() / "signforge_tests" / "pool_rt";
  fs::remove_all(dir);
  save_pool(pool, (dir / "pool.json").string());
  const PictogramPool back = load_pool((dir / "pool.json").string());
  for (const auto& [cid, list] : pool.candidates) {
    REQUIRE(back.pool_size(cid) == static_cast<int>(list.size()));
    for (int j = 1; j <= static_cast<int>(list.size()); ++j)
      CHECK(back.candidate(cid, j).alpha_mask.max_abs_diff(list[j - 1].alpha_mask) == 0.0);
  }
}

TEST_CASE("set_color clips into [0,1] and leaves the original untouched") {
  const TrafficSignStandard s = builtin_standard();
  const TrafficSignStandard t = set_color(s, 3, {1.5, -0.25, 0.5});
  CHECK(t.sign_class(3).color.almost_equal({1.0, 0.0, 0.5}));
  CHECK(s.sign_class(3).color.almost_equal({0, 0, 0}));
  CHECK_THROWS_AS(set_color(s, 99, {0, 0, 0}), ConfigError);
}

TEST_CASE("set_pictogram substitutes from the pool") {
  const TrafficSignStandard s = builtin_standard();
  const PictogramPool pool = builtin_pool();
  const TrafficSignStandard t = set_pictogram(s, 2, 3, pool);
  CHECK(t.sign_class(2).pictogram.id == pool.candidate(2, 3).id);
  CHECK(s.sign_class(2).pictogram.id != t.sign_class(2).pictogram.id);
  CHECK_THROWS_AS(set_pictogram(s, 2, 6, pool), ConfigError);
  CHECK_THROWS_AS(set_pictogram(s, 2, 0, pool), ConfigError);
}

TEST_CASE("validation rejects broken standards") {
  TrafficSignStandard s = builtin_standard();
  s.classes[1].class_id = 1;  // duplicate id
  CHECK_THROWS_AS(s.validate(), ConfigError);

  TrafficSignStandard gap = builtin_standard();
  gap.classes.pop_back();
  gap.classes[0].class_id = 9;  // non-contiguous
  CHECK_THROWS_AS(gap.validate(), ConfigError);

  TrafficSignStandard bad_color = builtin_standard();
  bad_color.classes[0].color = {2.0, 0.0, 0.0};
  CHECK_THROWS_AS(bad_color.validate(), ConfigError);
}

TEST_CASE("pictogram masks live on the 8-bit grid") {
  for (int cid = 1; cid <= 7; ++cid)
    for (int variant = 0; variant <= 5; ++variant) {
      const Pictogram p = builtin_pictogram(cid, variant);
      for (int i = 0; i < p.alpha_mask.size(); ++i) {
        const double v = p.alpha_mask.data[i];
        CHECK(v == doctest::Approx(std::round(v * 255.0) / 255.0).epsilon(1e-12));
      }
    }
}
