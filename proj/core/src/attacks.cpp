#include "signforge/attacks.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/rng.hpp"

using nlohmann::json;

namespace signforge {

int PatchPlacement::total_area() const {
  int area = 0;
  for (const auto& s : squares) area += s.side * s.side;
  return area;
}

bool PatchPlacement::contains(int y, int x) const {
  for (const auto& s : squares)
    if (y >= s.row && y < s.row + s.side && x >= s.col && x < s.col + s.side) return true;
  return false;
}

void PatchPlacement::validate(int h, int w) const {
  for (size_t i = 0; i < squares.size(); ++i) {
    const auto& a = squares[i];
    if (a.row < 0 || a.col < 0 || a.row + a.side > h || a.col + a.side > w)
      throw ConfigError("patch placement out of bounds");
    for (size_t j = i + 1; j < squares.size(); ++j) {
      const auto& b = squares[j];
      const bool disjoint = a.row + a.side <= b.row || b.row + b.side <= a.row ||
                            a.col + a.side <= b.col || b.col + b.side <= a.col;
      if (!disjoint) throw ConfigError("patch placement squares overlap");
    }
  }
}

void AttackConfig::validate() const {
  if (coverage <= 0.0 || coverage >= 0.5) throw ConfigError("attack config: coverage in (0,0.5)");
  if (m < 1) throw ConfigError("attack config: m >= 1");
  if (stride < 1) throw ConfigError("attack config: stride >= 1");
  if (opt_steps < 0 || step_size <= 0.0) throw ConfigError("attack config: bad optimization params");
  if (epsilon_linf < 0.0) throw ConfigError("attack config: epsilon_linf >= 0");
}

json AttackConfig::to_json() const {
  return json{{"coverage", coverage},
              {"m", m},
              {"stride", stride},
              {"init_color", {init_color.r, init_color.g, init_color.b}},
              {"opt_steps", opt_steps},
              {"step_size", step_size},
              {"bw_constraint", bw_constraint},
              {"epsilon_linf", epsilon_linf},
              {"targeted", targeted},
              {"universal_target", universal_target}};
}

AttackConfig AttackConfig::from_json(const json& j) {
  AttackConfig c;
  c.coverage = j.value("coverage", c.coverage);
  c.m = j.value("m", c.m);
  c.stride = j.value("stride", c.stride);
  if (j.contains("init_color")) {
    const auto& ic = j.at("init_color");
    c.init_color = {ic[0].get<double>(), ic[1].get<double>(), ic[2].get<double>()};
  }
  c.opt_steps = j.value("opt_steps", c.opt_steps);
  c.step_size = j.value("step_size", c.step_size);
  c.bw_constraint = j.value("bw_constraint", c.bw_constraint);
  c.epsilon_linf = j.value("epsilon_linf", c.epsilon_linf);
  c.targeted = j.value("targeted", c.targeted);
  c.universal_target = j.value("universal_target", c.universal_target);
  c.validate();
  return c;
}

int patch_side(double coverage, int m, int h, int w) {
  if (coverage <= 0.0 || m < 1 || h < 1 || w < 1) throw ConfigError("patch_side: bad inputs");
  const int side =
      static_cast<int>(std::lround(std::sqrt(coverage * static_cast<double>(h) * w / m)));
  return std::max(1, side);
}

namespace {

void fill_square(Image& img, const PatchSquare& sq, const RgbColor& color) {
  for (int y = sq.row; y < sq.row + sq.side; ++y)
    for (int x = sq.col; x < sq.col + sq.side; ++x)
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = color[ch];
}

bool squares_overlap(const PatchSquare& a, const PatchSquare& b) {
  return !(a.row + a.side <= b.row || b.row + b.side <= a.row || a.col + a.side <= b.col ||
           b.col + b.side <= a.col);
}

}  // namespace

PatchPlacement exhaustive_placement(Classifier& model, const Image& x, int label, int m, int side,
                                    int stride, const RgbColor& init_color) {
  if (side > std::min(x.h, x.w)) throw ConfigError("exhaustive_placement: side exceeds image");

  std::vector<PatchSquare> grid;
  for (int r = 0; r + side <= x.h; r += stride)
    for (int c = 0; c + side <= x.w; c += stride) grid.push_back({r, c, side});

  PatchPlacement placement;
  Image base = x;  // previously chosen squares already filled
  for (int k = 0; k < m; ++k) {
    // candidate images, row-major grid order, skipping overlaps
    std::vector<Image> cands;
    std::vector<size_t> cand_grid_idx;
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      bool overlaps = false;
      for (const auto& chosen : placement.squares)
        if (squares_overlap(grid[gi], chosen)) {
          overlaps = true;
          break;
        }
      if (overlaps) continue;
      Image cand = base;
      fill_square(cand, grid[gi], init_color);
      cands.push_back(std::move(cand));
      cand_grid_idx.push_back(gi);
    }
    if (cands.empty())
      throw ConfigError("exhaustive_placement: fewer than m non-overlapping candidates");

    std::vector<const Image*> ptrs;
    for (const auto& im : cands) ptrs.push_back(&im);
    const Eigen::VectorXd losses =
        model.losses(ptrs, std::vector<int>(cands.size(), label));

    // strict improvement keeps the first (smallest row-major) maximizer
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < losses.size(); ++i)
      if (losses[i] > losses[best]) best = i;

    placement.squares.push_back(grid[cand_grid_idx[static_cast<size_t>(best)]]);
    fill_square(base, placement.squares.back(), init_color);
  }
  placement.validate(x.h, x.w);
  return placement;
}

namespace {

/// Shared core of roa/rp4: sign-gradient ascent over the placement mask,
/// returning the best-loss iterate (the unmodified input is the fallback).
AttackOutcome patch_ascent(Classifier& model, const Image& x, int label,
                           const PatchPlacement& placement, const AttackConfig& cfg) {
  const std::vector<int> lbl{label};

  auto project_bw = [&](Image img) {
    for (const auto& sq : placement.squares)
      for (int y = sq.row; y < sq.row + sq.side; ++y)
        for (int xx = sq.col; xx < sq.col + sq.side; ++xx)
          for (int ch = 0; ch < 3; ++ch)
            img.at(y, xx, ch) = img.at(y, xx, ch) >= 0.5 ? 1.0 : 0.0;
    return img;
  };

  AttackOutcome out;
  out.placement = placement;
  out.loss_before = model.losses({&x}, lbl)[0];
  out.adversarial = x;  // fallback: no perturbation
  out.loss_after = out.loss_before;

  auto consider = [&](const Image& cand) {
    const Image eval_img = cfg.bw_constraint ? project_bw(cand) : cand;
    const double loss = model.losses({&eval_img}, lbl)[0];
    if (loss > out.loss_after) {
      out.loss_after = loss;
      out.adversarial = eval_img;
    }
  };

  Image cur = x;
  for (const auto& sq : placement.squares) fill_square(cur, sq, cfg.init_color);
  consider(cur);

  for (int step = 0; step < cfg.opt_steps; ++step) {
    const std::vector<Image> grads = model.input_gradients({&cur}, lbl);
    const Image& g = grads[0];
    for (const auto& sq : placement.squares)
      for (int y = sq.row; y < sq.row + sq.side; ++y)
        for (int xx = sq.col; xx < sq.col + sq.side; ++xx)
          for (int ch = 0; ch < 3; ++ch) {
            const double gv = g.at(y, xx, ch);
            const double sgn = gv > 0 ? 1.0 : (gv < 0 ? -1.0 : 0.0);
            cur.at(y, xx, ch) =
                std::clamp(cur.at(y, xx, ch) + cfg.step_size * sgn, 0.0, 1.0);
          }
    consider(cur);
  }

  out.success = model.predict({&out.adversarial})[0] != label;
  return out;
}

}  // namespace

AttackOutcome roa_attack(Classifier& model, const Image& x, int label, const AttackConfig& cfg) {
  cfg.validate();
  AttackConfig one = cfg;
  one.m = 1;
  one.bw_constraint = false;
  const int side = patch_side(one.coverage, 1, x.h, x.w);
  const PatchPlacement placement =
      exhaustive_placement(model, x, label, 1, side, one.stride, one.init_color);
  return patch_ascent(model, x, label, placement, one);
}

AttackOutcome rp4_attack(Classifier& model, const Image& x, int label, const AttackConfig& cfg) {
  cfg.validate();
  const int side = patch_side(cfg.coverage, cfg.m, x.h, x.w);
  const PatchPlacement placement =
      exhaustive_placement(model, x, label, cfg.m, side, cfg.stride, cfg.init_color);
  return patch_ascent(model, x, label, placement, cfg);
}

Image apply_patch_at(const Image& x, const Image& patch, int row, int col) {
  Image out = x;
  for (int y = 0; y < patch.h; ++y)
    for (int xx = 0; xx < patch.w; ++xx) {
      const int ty = row + y, tx = col + xx;
      if (ty < 0 || ty >= x.h || tx < 0 || tx >= x.w) continue;
      for (int ch = 0; ch < 3; ++ch) out.at(ty, tx, ch) = patch.at(y, xx, ch);
    }
  return out;
}

UniversalPatch universal_patch(Classifier& model, const LabeledImages& data, int target_class,
                               const AttackConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (data.images.empty()) throw ConfigError("universal_patch: empty dataset");
  if (target_class < 1 || target_class > model.n_classes())
    throw ConfigError("universal_patch: target class out of range");

  const int h = data.images[0].h, w = data.images[0].w;
  const int side = patch_side(cfg.coverage, 1, h, w);

  UniversalPatch up;
  up.side = side;
  up.target_class = target_class;
  up.patch = Image(side, side, 3);
  for (Eigen::Index i = 0; i < up.patch.data.size(); ++i)
    up.patch.data[i] = cfg.init_color[static_cast<int>(i % 3)];

  Rng rng(seed);
  const int batch = 8;
  for (int step = 0; step < cfg.opt_steps; ++step) {
    std::vector<Image> applied;
    std::vector<std::pair<int, int>> positions;
    for (int b = 0; b < batch; ++b) {
      const auto& img = data.images[rng.uniform_int(data.images.size())];
      const int row = static_cast<int>(rng.uniform_int(h - side + 1));
      const int col = static_cast<int>(rng.uniform_int(w - side + 1));
      applied.push_back(apply_patch_at(img, up.patch, row, col));
      positions.emplace_back(row, col);
    }
    std::vector<const Image*> ptrs;
    for (const auto& im : applied) ptrs.push_back(&im);
    // targeted: descend the cross-entropy toward target_class
    const std::vector<int> targets(batch, target_class);
    const std::vector<Image> grads = model.input_gradients(ptrs, targets);
    Image g(side, side, 3);
    for (int b = 0; b < batch; ++b)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          for (int ch = 0; ch < 3; ++ch)
            g.at(y, x, ch) += grads[b].at(positions[b].first + y, positions[b].second + x, ch);
    for (Eigen::Index i = 0; i < up.patch.data.size(); ++i) {
      const double gv = g.data[i];
      const double sgn = gv > 0 ? 1.0 : (gv < 0 ? -1.0 : 0.0);
      up.patch.data[i] = std::clamp(up.patch.data[i] - cfg.step_size * sgn, 0.0, 1.0);
    }
  }
  return up;
}

AttackOutcome pgd_linf(Classifier& model, const Image& x, int label, double epsilon, int steps,
                       double step_size) {
  if (epsilon < 0.0) throw ConfigError("pgd_linf: epsilon must be >= 0");
  const std::vector<int> lbl{label};

  AttackOutcome out;
  out.loss_before = model.losses({&x}, lbl)[0];
  out.adversarial = x;
  out.loss_after = out.loss_before;

  Image cur = x;
  for (int step = 0; step < steps; ++step) {
    const std::vector<Image> grads = model.input_gradients({&cur}, lbl);
    for (Eigen::Index i = 0; i < cur.data.size(); ++i) {
      const double gv = grads[0].data[i];
      const double sgn = gv > 0 ? 1.0 : (gv < 0 ? -1.0 : 0.0);
      double v = cur.data[i] + step_size * sgn;
      v = std::clamp(v, x.data[i] - epsilon, x.data[i] + epsilon);  // epsilon ball
      cur.data[i] = std::clamp(v, 0.0, 1.0);
    }
    const double loss = model.losses({&cur}, lbl)[0];
    if (loss > out.loss_after) {
      out.loss_after = loss;
      out.adversarial = cur;
    }
  }
  // fl(x + eps) can round above x + eps; nudge such pixels back so the
  // computed infinity norm respects the ball exactly.
  for (Eigen::Index i = 0; i < x.data.size(); ++i) {
    double& v = out.adversarial.data[i];
    while (std::abs(v - x.data[i]) > epsilon) v = std::nextafter(v, x.data[i]);
  }
  out.success = model.predict({&out.adversarial})[0] != label;
  return out;
}

const std::vector<std::string>& registered_attacks() {
  static const std::vector<std::string> ids = {"roa", "rp4", "universal", "pgd", "dorpatch"};
  return ids;
}

AttackOutcome run_attack(const std::string& id, Classifier& model, const Image& x, int label,
                         const AttackConfig& cfg) {
  if (id == "roa") return roa_attack(model, x, label, cfg);
  if (id == "rp4") return rp4_attack(model, x, label, cfg);
  if (id == "pgd")
    return pgd_linf(model, x, label, cfg.epsilon_linf, cfg.opt_steps, cfg.step_size);
  if (id == "dorpatch")
    throw NotImplementedError("attack 'dorpatch' is not implemented (external method)");
  if (id == "universal")
    throw ConfigError("attack 'universal' needs a precomputed patch; use the evaluation layer");
  throw ConfigError("unknown attack id: " + id);
}

}  // namespace signforge
