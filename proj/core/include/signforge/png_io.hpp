#pragma once

#include <string>

#include "signforge/image.hpp"

namespace signforge {

/// Reads an 8-bit PNG. Grayscale yields c=1, color yields c=3 (alpha is
/// composited over white). Values are normalized to [0,1].
Image read_png(const std::string& path);

/// Writes an image as 8-bit PNG (c=1 grayscale, c=3 RGB). Values are
/// clamped to [0,1] and quantized with round(v*255).
void write_png(const Image& img, const std::string& path);

}  // namespace signforge
