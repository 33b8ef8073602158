#include "signforge/scene.hpp"

#include <algorithm>
#include <cmath>

#include "signforge/errors.hpp"
#include "signforge/rng.hpp"

namespace signforge {

namespace {

// Smooth value-noise texture from a coarse random lattice.
Image value_noise(int size, int lattice, Rng& rng) {
  Image grid(lattice + 1, lattice + 1, 1);
  for (Eigen::Index i = 0; i < grid.data.size(); ++i) grid.data[i] = rng.uniform();
  Image out(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double gy = static_cast<double>(y) / (size - 1) * lattice;
      const double gx = static_cast<double>(x) / (size - 1) * lattice;
      out.at(y, x, 0) = grid.sample_bilinear(gy, gx, 0);
    }
  return out;
}

void paint_background(Image& bg, SignShape type, Rng& rng) {
  const int size = bg.h;
  const double horizon = rng.uniform(0.55, 0.75);
  // sky: vertical gradient between two bluish tones
  const double sky_top[3] = {rng.uniform(0.35, 0.6), rng.uniform(0.5, 0.75), rng.uniform(0.75, 0.95)};
  const double sky_bot[3] = {rng.uniform(0.6, 0.85), rng.uniform(0.7, 0.9), rng.uniform(0.85, 1.0)};
  // ground palette differs slightly per scene type
  const double base = type == SignShape::prohibitory_circle ? 0.32 : 0.28;
  const double ground[3] = {base + rng.uniform(-0.06, 0.12), base + rng.uniform(-0.04, 0.14),
                            base + rng.uniform(-0.08, 0.08)};
  Image tex = value_noise(size, 6, rng);
  for (int y = 0; y < size; ++y) {
    const double fy = static_cast<double>(y) / (size - 1);
    for (int x = 0; x < size; ++x) {
      if (fy < horizon) {
        const double t = fy / horizon;
        for (int ch = 0; ch < 3; ++ch)
          bg.at(y, x, ch) = sky_top[ch] * (1 - t) + sky_bot[ch] * t;
      } else {
        const double n = 0.7 + 0.6 * tex.at(y, x, 0);
        for (int ch = 0; ch < 3; ++ch) bg.at(y, x, ch) = std::clamp(ground[ch] * n, 0.0, 1.0);
      }
    }
  }
  // distractor shapes: muted rectangles and discs
  const int n_shapes = 2 + static_cast<int>(rng.uniform_int(3));
  for (int s = 0; s < n_shapes; ++s) {
    const double col[3] = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
    if (rng.uniform() < 0.5) {
      const int x0 = static_cast<int>(rng.uniform_int(size - 8));
      const int y0 = static_cast<int>(rng.uniform_int(size - 8));
      const int w = 4 + static_cast<int>(rng.uniform_int(10));
      const int h = 4 + static_cast<int>(rng.uniform_int(10));
      for (int y = y0; y < std::min(size, y0 + h); ++y)
        for (int x = x0; x < std::min(size, x0 + w); ++x)
          for (int ch = 0; ch < 3; ++ch) bg.at(y, x, ch) = col[ch];
    } else {
      const double cx = rng.uniform(4, size - 4);
      const double cy = rng.uniform(4, size - 4);
      const double r = rng.uniform(2.0, 6.0);
      for (int y = std::max(0, static_cast<int>(cy - r)); y <= std::min(size - 1, static_cast<int>(cy + r)); ++y)
        for (int x = std::max(0, static_cast<int>(cx - r)); x <= std::min(size - 1, static_cast<int>(cx + r)); ++x)
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
            for (int ch = 0; ch < 3; ++ch) bg.at(y, x, ch) = col[ch];
    }
  }
}

Quad sample_quad(int size, Rng& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double side = rng.uniform(0.55, 0.72) * size;
    const double cx = size / 2.0 + rng.uniform(-0.08, 0.08) * size;
    const double cy = size / 2.0 + rng.uniform(-0.08, 0.08) * size;
    Quad q = {Point2{cx - side / 2, cy - side / 2}, Point2{cx + side / 2, cy - side / 2},
              Point2{cx + side / 2, cy + side / 2}, Point2{cx - side / 2, cy + side / 2}};
    bool ok = true;
    const double jitter = 0.09 * side;
    for (auto& p : q) {
      p.x = std::clamp(p.x + rng.uniform(-jitter, jitter), 0.5, size - 1.5);
      p.y = std::clamp(p.y + rng.uniform(-jitter, jitter), 0.5, size - 1.5);
    }
    if (quad_is_convex(q)) return q;
    (void)ok;
  }
  throw Error("failed to sample a convex placement quad");
}

ContextScene flip_scene(const ContextScene& s) {
  ContextScene f = s;
  f.flipped = true;
  f.background = s.background.flipped_horizontal();
  const double w = s.background.w - 1.0;
  // mirror x and swap left/right corners so the embedded face stays unmirrored
  f.placement_quad[0] = {w - s.placement_quad[1].x, s.placement_quad[1].y};
  f.placement_quad[1] = {w - s.placement_quad[0].x, s.placement_quad[0].y};
  f.placement_quad[2] = {w - s.placement_quad[3].x, s.placement_quad[3].y};
  f.placement_quad[3] = {w - s.placement_quad[2].x, s.placement_quad[2].y};
  return f;
}

}  // namespace

std::vector<ContextScene> generate_scenes(const SceneConfig& config, std::uint64_t seed) {
  if (config.scenes_per_type < 1) throw ConfigError("scenes_per_type must be >= 1");
  if (config.image_size < 16) throw ConfigError("image_size must be >= 16");

  std::vector<ContextScene> out;
  int next_id = 0;
  for (const SignShape type : {SignShape::prohibitory_circle, SignShape::warning_triangle}) {
    for (int i = 0; i < config.scenes_per_type; ++i) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(type), static_cast<std::uint64_t>(i)}));
      ContextScene s;
      s.scene_id = next_id++;
      s.scene_type = type;
      s.flipped = false;
      s.background = Image(config.image_size, config.image_size, 3);
      paint_background(s.background, type, rng);
      s.placement_quad = sample_quad(config.image_size, rng);
      out.push_back(flip_scene(s));
      out.push_back(std::move(s));
      std::swap(out[out.size() - 2], out[out.size() - 1]);  // unflipped first
    }
  }
  return out;
}

}  // namespace signforge
