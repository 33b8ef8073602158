#include "signforge/image.hpp"

#include <algorithm>
#include <cmath>

#include "signforge/errors.hpp"

namespace signforge {

void Image::clip01() {
  data = data.cwiseMax(0.0).cwiseMin(1.0);
}

Image Image::flipped_horizontal() const {
  Image out(h, w, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = at(y, w - 1 - x, ch);
  return out;
}

double Image::sample_bilinear(double y, double x, int ch) const {
  const double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const int y0 = static_cast<int>(std::floor(yc));
  const int x0 = static_cast<int>(std::floor(xc));
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = yc - y0;
  const double fx = xc - x0;
  return (1 - fy) * ((1 - fx) * at(y0, x0, ch) + fx * at(y0, x1, ch)) +
         fy * ((1 - fx) * at(y1, x0, ch) + fx * at(y1, x1, ch));
}

double Image::max_abs_diff(const Image& other) const {
  if (other.data.size() != data.size())
    throw Error("max_abs_diff: shape mismatch");
  if (data.size() == 0) return 0.0;
  return (data - other.data).cwiseAbs().maxCoeff();
}

}  // namespace signforge
