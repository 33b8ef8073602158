#pragma once

#include <array>

#include <Eigen/Core>

#include "signforge/image.hpp"

namespace signforge {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

using Quad = std::array<Point2, 4>;  // top-left, top-right, bottom-right, bottom-left

/// 3x3 projective transform.
struct Homography {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  Point2 apply(const Point2& p) const;
  Homography inverse() const;

  /// Transform mapping the four source points onto the four destination
  /// points (solved as the standard 8x8 linear system).
  static Homography from_points(const Quad& src, const Quad& dst);

  /// Maps pixel corners of a w x h raster onto `dst`.
  static Homography raster_to_quad(int w, int h, const Quad& dst);
};

/// True if the quad is convex and consistently oriented.
bool quad_is_convex(const Quad& q);

/// Resamples `src` through `dst_to_src` with bilinear interpolation into an
/// image of the given size. Linear in the pixel values of `src`, so the same
/// call propagates tangent images. Out-of-range source coords produce `fill`.
Image warp_bilinear(const Image& src, const Homography& dst_to_src, int out_h, int out_w,
                    double fill);

}  // namespace signforge
