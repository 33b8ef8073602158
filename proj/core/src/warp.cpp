#include "signforge/warp.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "signforge/errors.hpp"

namespace signforge {

Point2 Homography::apply(const Point2& p) const {
  const Eigen::Vector3d v = m * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(v.z()) < 1e-12) return {1e30, 1e30};
  return {v.x() / v.z(), v.y() / v.z()};
}

Homography Homography::inverse() const { return {m.inverse()}; }

Homography Homography::from_points(const Quad& src, const Quad& dst) {
  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double sx = src[i].x, sy = src[i].y;
    const double dx = dst[i].x, dy = dst[i].y;
    a.row(2 * i) << sx, sy, 1, 0, 0, 0, -sx * dx, -sy * dx;
    a.row(2 * i + 1) << 0, 0, 0, sx, sy, 1, -sx * dy, -sy * dy;
    b[2 * i] = dx;
    b[2 * i + 1] = dy;
  }
  const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
  Homography out;
  out.m << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0;
  return out;
}

Homography Homography::raster_to_quad(int w, int h, const Quad& dst) {
  const Quad src = {Point2{0, 0}, Point2{static_cast<double>(w - 1), 0},
                    Point2{static_cast<double>(w - 1), static_cast<double>(h - 1)},
                    Point2{0, static_cast<double>(h - 1)}};
  return from_points(src, dst);
}

bool quad_is_convex(const Quad& q) {
  double sign = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point2& a = q[i];
    const Point2& b = q[(i + 1) % 4];
    const Point2& c = q[(i + 2) % 4];
    const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    if (std::abs(cross) < 1e-9) return false;
    if (sign == 0.0)
      sign = cross;
    else if (sign * cross < 0)
      return false;
  }
  return true;
}

Image warp_bilinear(const Image& src, const Homography& dst_to_src, int out_h, int out_w,
                    double fill) {
  Image out(out_h, out_w, src.c, fill);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Point2 s = dst_to_src.apply({static_cast<double>(x), static_cast<double>(y)});
      if (s.x < -0.5 || s.y < -0.5 || s.x > src.w - 0.5 || s.y > src.h - 0.5) continue;
      for (int ch = 0; ch < src.c; ++ch)
        out.at(y, x, ch) = src.sample_bilinear(s.y, s.x, ch);
    }
  }
  return out;
}

}  // namespace signforge
