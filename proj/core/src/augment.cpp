#include "signforge/augment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/warp.hpp"

namespace signforge {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Tangents = std::vector<Image>*;

// Applies `fn` to the primal and every tangent (for ops linear in pixels).
template <typename Fn>
void for_primal_and_tangents(Image& img, Tangents tg, Fn&& fn) {
  fn(img);
  if (tg)
    for (auto& t : *tg) fn(t);
}

void clip_and_zero_tangents(Image& img, Tangents tg) {
  if (tg) {
    for (Eigen::Index i = 0; i < img.data.size(); ++i) {
      if (img.data[i] < 0.0 || img.data[i] > 1.0)
        for (auto& t : *tg) t.data[i] = 0.0;
    }
  }
  img.clip01();
}

Image warp_clamped(const Image& src, const Homography& dst_to_src) {
  Image out(src.h, src.w, src.c);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      const Point2 s = dst_to_src.apply({static_cast<double>(x), static_cast<double>(y)});
      for (int ch = 0; ch < src.c; ++ch) out.at(y, x, ch) = src.sample_bilinear(s.y, s.x, ch);
    }
  return out;
}

// ---- pointwise color ops -------------------------------------------------

void op_darken(const AugmentationStep& s, Image& img, Tangents tg) {
  const double f = s.params[0];
  for_primal_and_tangents(img, tg, [f](Image& im) { im.data *= f; });
}

void op_brighten(const AugmentationStep& s, Image& img, Tangents tg) {
  const double f = s.params[0];
  for_primal_and_tangents(img, tg, [f](Image& im) { im.data *= f; });
}

void op_contrast(const AugmentationStep& s, Image& img, Tangents tg) {
  const double c = s.params[0];
  img.data = (img.data.array() - 0.5) * c + 0.5;
  if (tg)
    for (auto& t : *tg) t.data *= c;
}

void apply_color_matrix(const Eigen::Matrix3d& m, Image& im) {
  for (int y = 0; y < im.h; ++y)
    for (int x = 0; x < im.w; ++x) {
      const Eigen::Vector3d v(im.at(y, x, 0), im.at(y, x, 1), im.at(y, x, 2));
      const Eigen::Vector3d o = m * v;
      im.at(y, x, 0) = o[0];
      im.at(y, x, 1) = o[1];
      im.at(y, x, 2) = o[2];
    }
}

void op_saturation(const AugmentationStep& s, Image& img, Tangents tg) {
  const double sat = s.params[0];
  // out = luma + sat * (x - luma), luma = [0.299, 0.587, 0.114] . x
  Eigen::Matrix3d m;
  const Eigen::RowVector3d luma(0.299, 0.587, 0.114);
  m = Eigen::Matrix3d::Identity() * sat + Eigen::Vector3d::Ones() * luma * (1.0 - sat);
  for_primal_and_tangents(img, tg, [&m](Image& im) { apply_color_matrix(m, im); });
}

void op_hue_shift(const AugmentationStep& s, Image& img, Tangents tg) {
  // rotation around the gray axis (1,1,1)/sqrt(3)
  const double theta = s.params[0];
  const Eigen::Vector3d axis = Eigen::Vector3d::Ones().normalized();
  const Eigen::Matrix3d m = Eigen::AngleAxisd(theta, axis).toRotationMatrix();
  for_primal_and_tangents(img, tg, [&m](Image& im) { apply_color_matrix(m, im); });
}

void op_vignette(const AugmentationStep& s, Image& img, Tangents tg) {
  const double strength = s.params[0];
  const double cy = (img.h - 1) / 2.0, cx = (img.w - 1) / 2.0;
  const double dmax2 = cy * cy + cx * cx;
  for_primal_and_tangents(img, tg, [&](Image& im) {
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double f = 1.0 - strength * d2 / dmax2;
        for (int ch = 0; ch < im.c; ++ch) im.at(y, x, ch) *= f;
      }
  });
}

// ---- noise / occlusion ----------------------------------------------------

void op_gaussian_noise(const AugmentationStep& s, Image& img, Tangents) {
  const double sigma = s.params[0];
  Rng rng(s.noise_seed);
  for (Eigen::Index i = 0; i < img.data.size(); ++i) img.data[i] += sigma * rng.normal();
}

void op_cutout(const AugmentationStep& s, Image& img, Tangents tg) {
  const int cx = static_cast<int>(std::lround(s.params[0] * (img.w - 1)));
  const int cy = static_cast<int>(std::lround(s.params[1] * (img.h - 1)));
  const int half = static_cast<int>(std::lround(s.params[2])) / 2;
  const double fill = 0.5;
  for (int y = std::max(0, cy - half); y <= std::min(img.h - 1, cy + half); ++y)
    for (int x = std::max(0, cx - half); x <= std::min(img.w - 1, cx + half); ++x)
      for (int ch = 0; ch < img.c; ++ch) {
        img.at(y, x, ch) = fill;
        if (tg)
          for (auto& t : *tg) t.at(y, x, ch) = 0.0;
      }
}

// ---- blurs -----------------------------------------------------------------

void op_motion_blur(const AugmentationStep& s, Image& img, Tangents tg) {
  int taps = static_cast<int>(std::lround(s.params[0]));
  if (taps % 2 == 0) ++taps;
  taps = std::clamp(taps, 3, 7);
  const double angle = s.params[1];
  const double dx = std::cos(angle), dy = std::sin(angle);
  for_primal_and_tangents(img, tg, [&](Image& im) {
    Image src = im;
    const int half = taps / 2;
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x)
        for (int ch = 0; ch < im.c; ++ch) {
          double acc = 0.0;
          for (int t = -half; t <= half; ++t)
            acc += src.sample_bilinear(y + t * dy, x + t * dx, ch);
          im.at(y, x, ch) = acc / taps;
        }
  });
}

void op_gaussian_blur(const AugmentationStep& s, Image& img, Tangents tg) {
  const double sigma = s.params[0];
  const int radius = std::min(4, static_cast<int>(std::ceil(2.5 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  for_primal_and_tangents(img, tg, [&](Image& im) {
    Image tmp = im;
    for (int y = 0; y < im.h; ++y)  // horizontal
      for (int x = 0; x < im.w; ++x)
        for (int ch = 0; ch < im.c; ++ch) {
          double acc = 0.0;
          for (int i = -radius; i <= radius; ++i)
            acc += k[i + radius] * im.at(y, std::clamp(x + i, 0, im.w - 1), ch);
          tmp.at(y, x, ch) = acc;
        }
    for (int y = 0; y < im.h; ++y)  // vertical
      for (int x = 0; x < im.w; ++x)
        for (int ch = 0; ch < im.c; ++ch) {
          double acc = 0.0;
          for (int i = -radius; i <= radius; ++i)
            acc += k[i + radius] * tmp.at(std::clamp(y + i, 0, im.h - 1), x, ch);
          im.at(y, x, ch) = acc;
        }
  });
}

// ---- geometric -------------------------------------------------------------

void warp_op(Image& img, Tangents tg, const Homography& dst_to_src) {
  for_primal_and_tangents(img, tg, [&](Image& im) { im = warp_clamped(im, dst_to_src); });
}

void op_translate(const AugmentationStep& s, Image& img, Tangents tg) {
  Homography h;
  h.m << 1, 0, -s.params[0], 0, 1, -s.params[1], 0, 0, 1;
  warp_op(img, tg, h);
}

void op_rotate(const AugmentationStep& s, Image& img, Tangents tg) {
  const double theta = s.params[0] * kPi / 180.0;
  const double cy = (img.h - 1) / 2.0, cx = (img.w - 1) / 2.0;
  const double c = std::cos(-theta), sn = std::sin(-theta);
  Homography h;
  h.m << c, -sn, cx - c * cx + sn * cy, sn, c, cy - sn * cx - c * cy, 0, 0, 1;
  warp_op(img, tg, h);
}

void op_scale(const AugmentationStep& s, Image& img, Tangents tg) {
  const double inv = 1.0 / s.params[0];
  const double cy = (img.h - 1) / 2.0, cx = (img.w - 1) / 2.0;
  Homography h;
  h.m << inv, 0, cx * (1 - inv), 0, inv, cy * (1 - inv), 0, 0, 1;
  warp_op(img, tg, h);
}

void op_perspective_jitter(const AugmentationStep& s, Image& img, Tangents tg) {
  const double w = img.w - 1.0, h = img.h - 1.0;
  const Quad corners = {Point2{0, 0}, Point2{w, 0}, Point2{w, h}, Point2{0, h}};
  Quad jittered = corners;
  for (int i = 0; i < 4; ++i) {
    jittered[i].x += s.params[2 * i];
    jittered[i].y += s.params[2 * i + 1];
  }
  // destination -> source mapping
  warp_op(img, tg, Homography::from_points(corners, jittered));
}

// ---- frequency -------------------------------------------------------------

void op_jpeg_like(const AugmentationStep& s, Image& img, Tangents tg) {
  const double keep = s.params[0];
  static const Eigen::Matrix<double, 8, 8> dct = [] {
    Eigen::Matrix<double, 8, 8> d;
    for (int k = 0; k < 8; ++k)
      for (int n = 0; n < 8; ++n)
        d(k, n) = std::sqrt((k == 0 ? 1.0 : 2.0) / 8.0) *
                  std::cos(kPi / 8.0 * (n + 0.5) * k);
    return d;
  }();
  const int cutoff = static_cast<int>(std::lround(keep * 14.0));
  for_primal_and_tangents(img, tg, [&](Image& im) {
    const int bh = (im.h + 7) / 8 * 8, bw = (im.w + 7) / 8 * 8;
    for (int ch = 0; ch < im.c; ++ch) {
      Eigen::MatrixXd plane(bh, bw);
      for (int y = 0; y < bh; ++y)
        for (int x = 0; x < bw; ++x)
          plane(y, x) = im.at(std::min(y, im.h - 1), std::min(x, im.w - 1), ch);
      for (int by = 0; by < bh; by += 8)
        for (int bx = 0; bx < bw; bx += 8) {
          Eigen::Matrix<double, 8, 8> block = plane.block<8, 8>(by, bx);
          Eigen::Matrix<double, 8, 8> coeff = dct * block * dct.transpose();
          for (int u = 0; u < 8; ++u)
            for (int v = 0; v < 8; ++v)
              if (u + v > cutoff) coeff(u, v) = 0.0;
          plane.block<8, 8>(by, bx) = dct.transpose() * coeff * dct;
        }
      for (int y = 0; y < im.h; ++y)
        for (int x = 0; x < im.w; ++x) im.at(y, x, ch) = plane(y, x);
    }
  });
}

// ---- registry ---------------------------------------------------------------

struct OpSpec {
  std::function<void(Rng&, std::vector<double>&)> sample;
  std::function<void(const AugmentationStep&, Image&, Tangents)> apply;
};

const std::vector<std::pair<std::string, OpSpec>>& registry() {
  static const std::vector<std::pair<std::string, OpSpec>> ops = {
      {"gaussian_noise",
       {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.01, 0.08)}; }, op_gaussian_noise}},
      {"motion_blur",
       {[](Rng& r, std::vector<double>& p) { p = {3.0 + 2.0 * r.uniform_int(3), r.uniform(0.0, kPi)}; },
        op_motion_blur}},
      {"gaussian_blur",
       {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.4, 1.4)}; }, op_gaussian_blur}},
      {"darken", {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.5, 0.9)}; }, op_darken}},
      {"brighten", {[](Rng& r, std::vector<double>& p) { p = {r.uniform(1.1, 1.5)}; }, op_brighten}},
      {"contrast", {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.6, 1.4)}; }, op_contrast}},
      {"saturation_shift",
       {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.4, 1.6)}; }, op_saturation}},
      {"hue_shift",
       {[](Rng& r, std::vector<double>& p) { p = {r.uniform(-0.35, 0.35)}; }, op_hue_shift}},
      {"translate",
       {[](Rng& r, std::vector<double>& p) { p = {r.uniform(-3.0, 3.0), r.uniform(-3.0, 3.0)}; },
        op_translate}},
      {"rotate", {[](Rng& r, std::vector<double>& p) { p = {r.uniform(-10.0, 10.0)}; }, op_rotate}},
      {"scale", {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.88, 1.12)}; }, op_scale}},
      {"perspective_jitter",
       {[](Rng& r, std::vector<double>& p) {
          p.clear();
          for (int i = 0; i < 8; ++i) p.push_back(r.uniform(-2.5, 2.5));
        },
        op_perspective_jitter}},
      {"cutout_occlusion",
       {[](Rng& r, std::vector<double>& p) {
          p = {r.uniform(0.15, 0.85), r.uniform(0.15, 0.85), 3.0 + r.uniform_int(5)};
        },
        op_cutout}},
      {"jpeg_like_smoothing",
       {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.3, 0.8)}; }, op_jpeg_like}},
      {"vignette", {[](Rng& r, std::vector<double>& p) { p = {r.uniform(0.2, 0.6)}; }, op_vignette}},
  };
  return ops;
}

const OpSpec& find_op(const std::string& id) {
  for (const auto& [name, spec] : registry())
    if (name == id) return spec;
  throw ConfigError("unknown augmentation id: " + id);
}

Image apply_impl(const Image& image, const AugmentationChain& chain, Tangents tg) {
  chain.validate();
  Image img = image;
  for (const auto& step : chain.steps) {
    find_op(step.id).apply(step, img, tg);
    clip_and_zero_tangents(img, tg);
  }
  return img;
}

}  // namespace

void AugmentationChain::validate() const {
  if (steps.size() > 8) throw ConfigError("augmentation chain longer than 8");
  for (const auto& s : steps) find_op(s.id);
}

nlohmann::json AugmentationChain::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : steps)
    arr.push_back({{"id", s.id}, {"params", s.params}, {"noise_seed", s.noise_seed}});
  return arr;
}

AugmentationChain AugmentationChain::from_json(const nlohmann::json& j) {
  AugmentationChain c;
  for (const auto& js : j) {
    AugmentationStep s;
    s.id = js.at("id").get<std::string>();
    s.params = js.at("params").get<std::vector<double>>();
    s.noise_seed = js.at("noise_seed").get<std::uint64_t>();
    c.steps.push_back(std::move(s));
  }
  c.validate();
  return c;
}

const std::vector<std::string>& registered_augmentations() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [name, spec] : registry()) v.push_back(name);
    return v;
  }();
  return ids;
}

AugmentationChain sample_chain(Rng& rng) {
  const auto& ids = registered_augmentations();
  const int len = 1 + static_cast<int>(rng.uniform_int(8));
  // partial Fisher-Yates: draw `len` distinct op indices
  std::vector<int> idx(ids.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  AugmentationChain chain;
  for (int i = 0; i < len; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(idx.size() - i));
    std::swap(idx[i], idx[j]);
    AugmentationStep step;
    step.id = ids[idx[i]];
    find_op(step.id).sample(rng, step.params);
    step.noise_seed = rng.next_u64();
    chain.steps.push_back(std::move(step));
  }
  return chain;
}

Image apply_chain(const Image& image, const AugmentationChain& chain) {
  return apply_impl(image, chain, nullptr);
}

Image apply_chain_with_tangents(const Image& image, const AugmentationChain& chain,
                                std::vector<Image>& tangents) {
  return apply_impl(image, chain, &tangents);
}

}  // namespace signforge
