#pragma once

#include <Eigen/Core>

namespace signforge {

/// Dense H x W x C image with values nominally in [0,1].
/// Storage is row-major (y, x, channel).
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  Eigen::VectorXd data;

  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0)
      : h(height), w(width), c(channels),
        data(Eigen::VectorXd::Constant(
            static_cast<Eigen::Index>(height) * width * channels, fill)) {}

  double& at(int y, int x, int ch) {
    return data[(static_cast<Eigen::Index>(y) * w + x) * c + ch];
  }
  double at(int y, int x, int ch) const {
    return data[(static_cast<Eigen::Index>(y) * w + x) * c + ch];
  }

  Eigen::Index size() const { return data.size(); }
  bool empty() const { return data.size() == 0; }

  /// Clamps every value into [0,1] in place.
  void clip01();

  /// Horizontal mirror.
  Image flipped_horizontal() const;

  /// Bilinear sample at sub-pixel (y, x); out-of-bounds clamps to edge.
  double sample_bilinear(double y, double x, int ch) const;

  /// Max absolute difference to another image of identical shape.
  double max_abs_diff(const Image& other) const;
};

}  // namespace signforge
