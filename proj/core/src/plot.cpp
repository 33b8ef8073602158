#include "signforge/plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>

#include "signforge/errors.hpp"
#include "signforge/image.hpp"
#include "signforge/png_io.hpp"

namespace signforge {

namespace {

// 5x7 bitmap glyphs, one byte per row, low 5 bits used (bit 4 = left column).
const std::map<char, std::array<std::uint8_t, 7>>& glyphs() {
  static const std::map<char, std::array<std::uint8_t, 7>> g = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {'%', {0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13}},
      {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
      {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
  };
  return g;
}

struct Canvas {
  Image img;

  Canvas(int h, int w) : img(h, w, 3, 1.0) {}

  void set(int y, int x, double r, double g, double b) {
    if (y < 0 || y >= img.h || x < 0 || x >= img.w) return;
    img.at(y, x, 0) = r;
    img.at(y, x, 1) = g;
    img.at(y, x, 2) = b;
  }

  void line(double y0, double x0, double y1, double x1, double r, double g, double b) {
    const double len = std::max(std::abs(y1 - y0), std::abs(x1 - x0));
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int i = 0; i <= steps; ++i) {
      const double u = static_cast<double>(i) / steps;
      set(static_cast<int>(std::lround(y0 + u * (y1 - y0))),
          static_cast<int>(std::lround(x0 + u * (x1 - x0))), r, g, b);
    }
  }

  void text(int y, int x, const std::string& s, double r = 0.0, double g = 0.0, double b = 0.0) {
    int cx = x;
    for (char raw : s) {
      const char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
      auto it = glyphs().find(ch);
      if (it != glyphs().end()) {
        for (int row = 0; row < 7; ++row)
          for (int col = 0; col < 5; ++col)
            if (it->second[static_cast<size_t>(row)] & (1 << (4 - col)))
              set(y + row, cx + col, r, g, b);
      }
      cx += 6;
    }
  }
};

struct Rgb {
  double r, g, b;
};

const std::array<Rgb, 6> kPalette = {{{0.85, 0.2, 0.2},
                                      {0.2, 0.35, 0.85},
                                      {0.15, 0.6, 0.25},
                                      {0.8, 0.55, 0.1},
                                      {0.55, 0.25, 0.7},
                                      {0.2, 0.65, 0.65}}};

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

void render_line_plot(const std::vector<PlotSeries>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& png_path, int width, int height) {
  if (series.empty()) throw ConfigError("render_line_plot: no series");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ConfigError("render_line_plot: x/y length mismatch");
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (xmin > xmax) throw ConfigError("render_line_plot: empty series");
  if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;

  Canvas cv(height, width);
  const int left = 56, right = width - 16, top = 28, bottom = height - 40;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
  auto py = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

  // frame, grid and tick labels
  for (int i = 0; i <= 4; ++i) {
    const double gy = ymin + (ymax - ymin) * i / 4.0;
    const double gx = xmin + (xmax - xmin) * i / 4.0;
    cv.line(py(gy), left, py(gy), right, 0.88, 0.88, 0.88);
    cv.line(top, px(gx), bottom, px(gx), 0.88, 0.88, 0.88);
    cv.text(static_cast<int>(py(gy)) - 3, 4, format_tick(gy));
    cv.text(bottom + 6, static_cast<int>(px(gx)) - 8, format_tick(gx));
  }
  cv.line(top, left, bottom, left, 0, 0, 0);
  cv.line(bottom, left, bottom, right, 0, 0, 0);
  cv.text(8, left, title);
  cv.text(bottom + 20, (left + right) / 2 - 3 * static_cast<int>(x_label.size()), x_label);
  cv.text(top - 12, 4, y_label);

  for (size_t si = 0; si < series.size(); ++si) {
    const Rgb col = kPalette[si % kPalette.size()];
    const auto& s = series[si];
    for (size_t i = 0; i + 1 < s.x.size(); ++i)
      cv.line(py(s.y[i]), px(s.x[i]), py(s.y[i + 1]), px(s.x[i + 1]), col.r, col.g, col.b);
    for (size_t i = 0; i < s.x.size(); ++i)  // markers
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          cv.set(static_cast<int>(py(s.y[i])) + dy, static_cast<int>(px(s.x[i])) + dx, col.r,
                 col.g, col.b);
    const int ly = top + 4 + static_cast<int>(si) * 12;
    cv.line(ly + 3, right - 120, ly + 3, right - 104, col.r, col.g, col.b);
    cv.text(ly, right - 100, s.name);
  }
  write_png(cv.img, png_path);
}

}  // namespace signforge
