#include <doctest.h>

#include <cmath>

#include "signforge/scene.hpp"
#include "signforge/warp.hpp"

using namespace signforge;

TEST_CASE("homography maps unit square corners to the quad exactly") {
  const Quad src = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  const Quad dst = {{{10, 5}, {40, 8}, {44, 42}, {7, 38}}};
  const Homography h = Homography::from_points(src, dst);
  for (size_t i = 0; i < 4; ++i) {
    const Point2 p = h.apply(src[i]);
    CHECK(p.x == doctest::Approx(dst[i].x).epsilon(1e-9));
    CHECK(p.y == doctest::Approx(dst[i].y).epsilon(1e-9));
  }
}

TEST_CASE("homography inverse composes to identity") {
  const Quad src = {{{0, 0}, {47, 0}, {47, 47}, {0, 47}}};
  const Quad dst = {{{3, 2}, {44, 6}, {41, 45}, {5, 40}}};
  const Homography h = Homography::from_points(src, dst);
  const Homography hi = h.inverse();
  for (double y = 0; y < 48; y += 11.3)
    for (double x = 0; x < 48; x += 7.7) {
      const Point2 p = hi.apply(h.apply({x, y}));
      CHECK(p.x == doctest::Approx(x).epsilon(1e-8));
      CHECK(p.y == doctest::Approx(y).epsilon(1e-8));
    }
}

TEST_CASE("identity warp reproduces the image") {
  Image img(8, 8, 3);
  for (int i = 0; i < img.size(); ++i) img.data[i] = (i % 11) / 10.0;
  Homography ident;
  ident.m.setIdentity();
  const Image out = warp_bilinear(img, ident, 8, 8, 0.0);
  CHECK(out.max_abs_diff(img) < 1e-12);
}

TEST_CASE("scene generation is deterministic and well-formed") {
  const SceneConfig cfg{3, 48};
  const auto a = generate_scenes(cfg, 99);
  const auto b = generate_scenes(cfg, 99);
  const auto c = generate_scenes(cfg, 100);
  REQUIRE(a.size() == 4 * 3);  // both types, both flips
  REQUIRE(b.size() == a.size());
  bool identical = true, differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    identical &= a[i].background.max_abs_diff(b[i].background) == 0.0;
    differs |= a[i].background.max_abs_diff(c[i].background) > 0.0;
  }
  CHECK(identical);
  CHECK(differs);

  int circles = 0, triangles = 0, flipped = 0;
  for (const auto& s : a) {
    (s.scene_type == SignShape::prohibitory_circle ? circles : triangles)++;
    flipped += s.flipped;
    CHECK(quad_is_convex(s.placement_quad));
    CHECK(s.background.h == 48);
    CHECK(s.background.w == 48);
    for (int i = 0; i < s.background.size(); ++i) {
      REQUIRE(s.background.data[i] >= 0.0);
      REQUIRE(s.background.data[i] <= 1.0);
    }
  }
  CHECK(circles == 6);
  CHECK(triangles == 6);
  CHECK(flipped == 6);
}

TEST_CASE("flipped scene mirrors the background of its base") {
  const auto scenes = generate_scenes({2, 48}, 5);
  for (const auto& s : scenes) {
    if (!s.flipped) continue;
    // find the unflipped sibling
    for (const auto& base : scenes) {
      if (base.scene_id == s.scene_id && !base.flipped) {
        CHECK(s.background.max_abs_diff(base.background.flipped_horizontal()) == 0.0);
      }
    }
  }
}
