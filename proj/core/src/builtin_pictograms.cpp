#include <cmath>
#include <string>
#include <vector>

#include "signforge/errors.hpp"
#include "signforge/standard.hpp"

namespace signforge {

namespace {

struct Vec2 {
  double x, y;
};

// Primitives live in unit coordinates, (0,0) top-left.
struct Primitive {
  enum Kind { capsule, disc, ring, polygon } kind;
  std::vector<Vec2> pts;  // capsule: 2 endpoints; disc/ring: 1 center; polygon: CCW hull
  double r0 = 0.0;        // radius / outer radius
  double r1 = 0.0;        // inner radius (ring)
};

bool inside(const Primitive& p, double x, double y) {
  switch (p.kind) {
    case Primitive::capsule: {
      const Vec2 a = p.pts[0], b = p.pts[1];
      const double vx = b.x - a.x, vy = b.y - a.y;
      const double len2 = vx * vx + vy * vy;
      double t = len2 > 0 ? ((x - a.x) * vx + (y - a.y) * vy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double dx = x - (a.x + t * vx), dy = y - (a.y + t * vy);
      return dx * dx + dy * dy <= p.r0 * p.r0;
    }
    case Primitive::disc: {
      const double dx = x - p.pts[0].x, dy = y - p.pts[0].y;
      return dx * dx + dy * dy <= p.r0 * p.r0;
    }
    case Primitive::ring: {
      const double dx = x - p.pts[0].x, dy = y - p.pts[0].y;
      const double d2 = dx * dx + dy * dy;
      return d2 <= p.r0 * p.r0 && d2 >= p.r1 * p.r1;
    }
    case Primitive::polygon: {
      const auto& v = p.pts;
      for (size_t i = 0; i < v.size(); ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % v.size()];
        if ((b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) < 0) return false;
      }
      return true;
    }
  }
  return false;
}

Image rasterize(const std::vector<Primitive>& prims, int resolution) {
  Image mask(resolution, resolution, 1);
  const int ss = 4;  // supersampling per axis
  for (int py = 0; py < resolution; ++py) {
    for (int px = 0; px < resolution; ++px) {
      int hits = 0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const double x = (px + (sx + 0.5) / ss) / resolution;
          const double y = (py + (sy + 0.5) / ss) / resolution;
          for (const auto& p : prims)
            if (inside(p, x, y)) {
              ++hits;
              break;
            }
        }
      // snap to the 8-bit grid so PNG persistence is exact
      const double cov = static_cast<double>(hits) / (ss * ss);
      mask.at(py, px, 0) = std::round(cov * 255.0) / 255.0;
    }
  }
  return mask;
}

Primitive cap(double x0, double y0, double x1, double y1, double r) {
  return {Primitive::capsule, {{x0, y0}, {x1, y1}}, r, 0.0};
}
Primitive disc(double cx, double cy, double r) {
  return {Primitive::disc, {{cx, cy}}, r, 0.0};
}
Primitive ring(double cx, double cy, double ro, double ri) {
  return {Primitive::ring, {{cx, cy}}, ro, ri};
}
Primitive quad(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  return {Primitive::polygon, {a, b, c, d}, 0.0, 0.0};
}

struct Glyph {
  std::string name;
  std::vector<Primitive> prims;
};

// Class 1 (prohibitory): horizontal-bar family.
Glyph glyph_class1(int v) {
  switch (v) {
    case 0: return {"bar", {cap(0.18, 0.5, 0.82, 0.5, 0.10)}};
    case 1: return {"bar_thick", {cap(0.15, 0.5, 0.85, 0.5, 0.16)}};
    case 2: return {"bar_thin", {cap(0.20, 0.5, 0.80, 0.5, 0.055)}};
    case 3: return {"double_bar", {cap(0.18, 0.36, 0.82, 0.36, 0.08), cap(0.18, 0.64, 0.82, 0.64, 0.08)}};
    case 4: return {"block", {quad({0.22, 0.30}, {0.22, 0.70}, {0.78, 0.70}, {0.78, 0.30})}};
    case 5: return {"bar_short", {cap(0.32, 0.5, 0.68, 0.5, 0.12)}};
  }
  throw Error("bad variant");
}

// Class 2 (prohibitory): diagonal-cross family.
Glyph glyph_class2(int v) {
  switch (v) {
    case 0: return {"cross", {cap(0.22, 0.22, 0.78, 0.78, 0.085), cap(0.78, 0.22, 0.22, 0.78, 0.085)}};
    case 1: return {"cross_thick", {cap(0.20, 0.20, 0.80, 0.80, 0.13), cap(0.80, 0.20, 0.20, 0.80, 0.13)}};
    case 2: return {"slash", {cap(0.22, 0.22, 0.78, 0.78, 0.11)}};
    case 3: return {"plus", {cap(0.5, 0.18, 0.5, 0.82, 0.09), cap(0.18, 0.5, 0.82, 0.5, 0.09)}};
    case 4: return {"cross_small", {cap(0.34, 0.34, 0.66, 0.66, 0.07), cap(0.66, 0.34, 0.34, 0.66, 0.07)}};
    case 5: return {"asterisk",
                    {cap(0.5, 0.2, 0.5, 0.8, 0.065), cap(0.26, 0.34, 0.74, 0.66, 0.065),
                     cap(0.74, 0.34, 0.26, 0.66, 0.065)}};
  }
  throw Error("bad variant");
}

// Class 3 (prohibitory): dot family.
Glyph glyph_class3(int v) {
  switch (v) {
    case 0: return {"dot", {disc(0.5, 0.5, 0.24)}};
    case 1: return {"dot_large", {disc(0.5, 0.5, 0.32)}};
    case 2: return {"dot_small", {disc(0.5, 0.5, 0.15)}};
    case 3: return {"ring", {ring(0.5, 0.5, 0.30, 0.17)}};
    case 4: return {"diamond", {quad({0.5, 0.16}, {0.16, 0.5}, {0.5, 0.84}, {0.84, 0.5})}};
    case 5: return {"two_dots", {disc(0.34, 0.5, 0.16), disc(0.66, 0.5, 0.16)}};
  }
  throw Error("bad variant");
}

// Class 4 (prohibitory): twin vertical bars.
Glyph glyph_class4(int v) {
  switch (v) {
    case 0: return {"pillars", {cap(0.36, 0.22, 0.36, 0.78, 0.08), cap(0.64, 0.22, 0.64, 0.78, 0.08)}};
    case 1: return {"pillars_thick", {cap(0.34, 0.20, 0.34, 0.80, 0.12), cap(0.66, 0.20, 0.66, 0.80, 0.12)}};
    case 2: return {"single_pillar", {cap(0.5, 0.18, 0.5, 0.82, 0.11)}};
    case 3: return {"gate", {cap(0.32, 0.25, 0.32, 0.80, 0.07), cap(0.68, 0.25, 0.68, 0.80, 0.07),
                             cap(0.32, 0.27, 0.68, 0.27, 0.07)}};
    case 4: return {"three_pillars", {cap(0.28, 0.25, 0.28, 0.75, 0.06), cap(0.5, 0.25, 0.5, 0.75, 0.06),
                                      cap(0.72, 0.25, 0.72, 0.75, 0.06)}};
    case 5: return {"pillars_short", {cap(0.38, 0.34, 0.38, 0.66, 0.09), cap(0.62, 0.34, 0.62, 0.66, 0.09)}};
  }
  throw Error("bad variant");
}

// Class 5 (warning): exclamation family. Triangle interior sits lower, so
// glyphs are biased toward the lower-center region.
Glyph glyph_class5(int v) {
  switch (v) {
    case 0: return {"exclaim", {cap(0.5, 0.38, 0.5, 0.64, 0.07), disc(0.5, 0.82, 0.07)}};
    case 1: return {"exclaim_bold", {cap(0.5, 0.36, 0.5, 0.62, 0.105), disc(0.5, 0.83, 0.095)}};
    case 2: return {"exclaim_thin", {cap(0.5, 0.40, 0.5, 0.66, 0.045), disc(0.5, 0.82, 0.05)}};
    case 3: return {"wedge", {quad({0.5, 0.36}, {0.40, 0.68}, {0.60, 0.68}, {0.5, 0.36}),
                              disc(0.5, 0.82, 0.07)}};
    case 4: return {"double_exclaim", {cap(0.40, 0.40, 0.40, 0.62, 0.055), disc(0.40, 0.80, 0.055),
                                       cap(0.60, 0.40, 0.60, 0.62, 0.055), disc(0.60, 0.80, 0.055)}};
    case 5: return {"lightning", {cap(0.56, 0.36, 0.44, 0.58, 0.06), cap(0.44, 0.58, 0.58, 0.60, 0.05),
                                  cap(0.58, 0.60, 0.46, 0.84, 0.06)}};
  }
  throw Error("bad variant");
}

// Class 6 (warning): zigzag/bump family.
Glyph glyph_class6(int v) {
  switch (v) {
    case 0: return {"zigzag", {cap(0.30, 0.72, 0.42, 0.52, 0.06), cap(0.42, 0.52, 0.54, 0.72, 0.06),
                               cap(0.54, 0.72, 0.66, 0.52, 0.06)}};
    case 1: return {"zigzag_bold", {cap(0.28, 0.74, 0.42, 0.50, 0.09), cap(0.42, 0.50, 0.56, 0.74, 0.09),
                                    cap(0.56, 0.74, 0.70, 0.50, 0.09)}};
    case 2: return {"bumps", {disc(0.38, 0.70, 0.10), disc(0.62, 0.70, 0.10)}};
    case 3: return {"wave", {cap(0.28, 0.66, 0.40, 0.58, 0.055), cap(0.40, 0.58, 0.52, 0.66, 0.055),
                             cap(0.52, 0.66, 0.64, 0.58, 0.055), cap(0.64, 0.58, 0.72, 0.64, 0.055)}};
    case 4: return {"chevron_up", {cap(0.34, 0.74, 0.5, 0.46, 0.075), cap(0.5, 0.46, 0.66, 0.74, 0.075)}};
    case 5: return {"steps", {quad({0.30, 0.62}, {0.30, 0.74}, {0.50, 0.74}, {0.50, 0.62}),
                              quad({0.50, 0.50}, {0.50, 0.74}, {0.70, 0.74}, {0.70, 0.50})}};
  }
  throw Error("bad variant");
}

// Class 7 (warning): arrow/curve family.
Glyph glyph_class7(int v) {
  switch (v) {
    case 0: return {"arrow_right", {cap(0.34, 0.64, 0.62, 0.64, 0.06), cap(0.62, 0.64, 0.52, 0.52, 0.055),
                                    cap(0.62, 0.64, 0.52, 0.76, 0.055)}};
    case 1: return {"arrow_bold", {cap(0.32, 0.64, 0.60, 0.64, 0.09), cap(0.66, 0.64, 0.50, 0.48, 0.07),
                                   cap(0.66, 0.64, 0.50, 0.80, 0.07)}};
    case 2: return {"curve", {cap(0.38, 0.80, 0.44, 0.60, 0.06), cap(0.44, 0.60, 0.58, 0.52, 0.06),
                              cap(0.58, 0.52, 0.64, 0.38, 0.06)}};
    case 3: return {"arrow_up", {cap(0.5, 0.44, 0.5, 0.80, 0.06), cap(0.5, 0.44, 0.38, 0.58, 0.055),
                                 cap(0.5, 0.44, 0.62, 0.58, 0.055)}};
    case 4: return {"hook", {cap(0.40, 0.78, 0.40, 0.56, 0.065), cap(0.40, 0.56, 0.58, 0.56, 0.065),
                             cap(0.58, 0.56, 0.58, 0.72, 0.065)}};
    case 5: return {"triangle_glyph", {quad({0.5, 0.44}, {0.36, 0.76}, {0.64, 0.76}, {0.5, 0.44})}};
  }
  throw Error("bad variant");
}

Glyph builtin_glyph(int class_id, int variant) {
  switch (class_id) {
    case 1: return glyph_class1(variant);
    case 2: return glyph_class2(variant);
    case 3: return glyph_class3(variant);
    case 4: return glyph_class4(variant);
    case 5: return glyph_class5(variant);
    case 6: return glyph_class6(variant);
    case 7: return glyph_class7(variant);
  }
  throw ConfigError("builtin pictograms cover classes 1..7, got " + std::to_string(class_id));
}

}  // namespace

Pictogram builtin_pictogram(int class_id, int variant, int resolution) {
  if (variant < 0 || variant > 5) throw ConfigError("builtin variant must be in 0..5");
  const Glyph g = builtin_glyph(class_id, variant);
  Pictogram p;
  p.id = "c" + std::to_string(class_id) + "_" + g.name;
  p.display_name = g.name;
  p.source = PictogramSource::builtin;
  p.alpha_mask = rasterize(g.prims, resolution);
  return p;
}

TrafficSignStandard builtin_standard() {
  TrafficSignStandard s;
  s.name = "builtin-7";
  s.version = "1";
  for (int cid = 1; cid <= 7; ++cid) {
    SignClass c;
    c.class_id = cid;
    c.shape = cid <= 4 ? SignShape::prohibitory_circle : SignShape::warning_triangle;
    c.pictogram = builtin_pictogram(cid, 0);
    c.color = {0.0, 0.0, 0.0};
    s.classes.push_back(std::move(c));
  }
  s.validate();
  return s;
}

PictogramPool builtin_pool() {
  PictogramPool pool;
  for (int cid = 1; cid <= 7; ++cid)
    for (int v = 1; v <= 5; ++v) pool.candidates[cid].push_back(builtin_pictogram(cid, v));
  pool.validate();
  return pool;
}

}  // namespace signforge
