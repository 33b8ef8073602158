// Acceptance gate: ten end-to-end checks, one PASS/FAIL line each.
// Exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signforge/attacks.hpp"
#include "signforge/errors.hpp"
#include "signforge/eval.hpp"
#include "signforge/model.hpp"
#include "signforge/optimize.hpp"
#include "signforge/pipeline.hpp"
#include "signforge/rng.hpp"
#include "signforge/runconfig.hpp"
#include "signforge/standard.hpp"
#include "signforge/synth.hpp"

using namespace signforge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw CheckFailure(msg);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

template <typename F>
void criterion(int id, const std::string& name, F&& body) {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << fmt(secs)
            << "s)" << (detail.empty() ? "" : ": " + detail) << "\n"
            << std::flush;
  if (!ok) ++g_failures;
}

Image random_image(int size, std::uint64_t seed) {
  Image img(size, size, 3);
  Rng rng(seed);
  for (int i = 0; i < img.size(); ++i) img.data[i] = rng.uniform();
  return img;
}

LabeledImages render_split_of(const DatasetManifest& manifest, const TrafficSignStandard& standard,
                              const std::vector<ContextScene>& scenes, Split split) {
  LabeledImages out;
  for (int idx : manifest.indices(split)) {
    const SampleRecord& rec = manifest.records[static_cast<size_t>(idx)];
    out.images.push_back(render_sample(rec, standard, scenes));
    out.labels.push_back(rec.label);
  }
  return out;
}

/// Shared experiment context for the training-heavy checks (5-8). One synth
/// profile sized so the test split holds >= 200 samples on a single core.
struct Context {
  std::uint64_t seed = 7;
  SynthConfig synth;
  TrainConfig train;
  AttackConfig eval_attack;   // rp4, m=4 @ 5%
  AttackConfig inner_attack;  // roa inside adversarial training
  std::vector<ContextScene> scenes;
  TrafficSignStandard original = builtin_standard();
  PictogramPool pool = builtin_pool();

  std::optional<Classifier> baseline;
  std::optional<EvalReport> baseline_eval;
  std::optional<OptimizeStandardResult> optimized;
  std::optional<EvalReport> joint_eval;
  std::optional<EvalReport> scratch_eval;  // small_conv from scratch on optimized

  Context() {
    const RunConfig desk = desk_config();
    synth = desk.synth;
    synth.augmented_per_base = 15;  // test split: 7 * 2 * 15 = 210 >= 200
    synth.master_seed = derive_seed(seed, {0x44415441ULL});
    train = desk.train;
    eval_attack = desk.eval_attack;
    inner_attack = desk.inner_attack;
    scenes = generate_scenes({synth.scenes_per_type, synth.image_size},
                             derive_seed(seed, {0x5343454EULL}));
  }

  OptimizeDeps deps() const {
    OptimizeDeps d;
    d.scenes = &scenes;
    d.synth_cfg = synth;
    d.train_cfg = train;
    d.eval_attack = eval_attack;
    d.inner_attack_cfg = inner_attack;
    d.arch = Architecture::small_conv;
    d.search_phase1_epochs = 10;
    d.search_phase2_epochs = 2;
    return d;
  }

  /// Standard + adversarial phases from scratch, then rp4 robust eval on the
  /// standard's own test split (cap 200).
  std::pair<Classifier, EvalReport> train_and_eval(const TrafficSignStandard& standard,
                                                   Architecture arch, std::uint64_t run_seed) {
    const DatasetManifest manifest = instantiate(standard, scenes, synth);
    const LabeledImages train_set = render_split_of(manifest, standard, scenes, Split::train);
    const LabeledImages test_set = render_split_of(manifest, standard, scenes, Split::test);
    TrainConfig tc = train;
    // the deeper net diverges at the default phase-1 rate (benign 0.52 vs
    // 0.87 at 0.02); each architecture gets a rate it can actually train with
    if (arch == Architecture::resnet_like) tc.phase1_lr = 0.02;
    tc.seed = derive_seed(run_seed, {0x5452ULL});
    Classifier model(arch, original.n_classes(), synth.image_size,
                     derive_seed(run_seed, {0x4D4F44ULL}));
    train_standard(model, train_set, tc);
    train_doa(model, train_set, tc, make_roa_inner_attack(inner_attack));
    EvalReport rep = robust_accuracy(model, test_set, "rp4", eval_attack, 200, nullptr,
                                     derive_seed(run_seed, {0x4556ULL}));
    return {std::move(model), std::move(rep)};
  }

  void ensure_baseline() {
    if (baseline) return;
    auto [model, rep] = train_and_eval(original, Architecture::small_conv,
                                       derive_seed(seed, {0x42415345ULL}));
    baseline.emplace(std::move(model));
    baseline_eval = rep;
  }

  void ensure_optimized() {
    if (optimized) return;
    PictogramSearchConfig search;
    search.runs_per_candidate = 1;
    search.class_order = PictogramSearchConfig::Order::random;
    search.eval_attack = eval_attack;
    search.seed = derive_seed(seed, {0x53524348ULL});
    ColorOptConfig color;
    // per-class movement budget is iterations / n * alpha per channel; 350
    // iterations let every class reach a saturated corner from a random init,
    // which is what makes the colors transfer to from-scratch training
    color.iterations = 450;
    color.restarts = 3;
    color.init = ColorOptConfig::Init::random;
    color.adv_batch = 12;
    color.eval_samples = 100;
    color.seed = derive_seed(seed, {0x434F4C52ULL});
    optimized = optimize_standard(original, pool, original.n_classes(), search, color, deps());

    Classifier joint = optimized->colors.rebuild_model(original.n_classes());
    const DatasetManifest manifest = instantiate(optimized->standard, scenes, synth);
    const LabeledImages test_set =
        render_split_of(manifest, optimized->standard, scenes, Split::test);
    joint_eval = robust_accuracy(joint, test_set, "rp4", eval_attack, 200, nullptr,
                                 derive_seed(seed, {0x4556414CULL}));
  }

  void ensure_scratch() {
    ensure_optimized();
    if (scratch_eval) return;
    auto [model, rep] = train_and_eval(optimized->standard, Architecture::small_conv,
                                       derive_seed(seed, {0x53435241ULL}));
    scratch_eval = rep;
  }
};

// ------------------------------------------------------------- criterion 1

std::string check_count_law() {
  const TrafficSignStandard standard = builtin_standard();

  SynthConfig paper;  // full-scale defaults
  paper.master_seed = 3;
  const auto paper_scenes = generate_scenes({paper.scenes_per_type, paper.image_size}, 3);
  const DatasetManifest pm = instantiate(standard, paper_scenes, paper);
  std::set<std::tuple<int, int, bool>> bases;
  for (const auto& r : pm.records) bases.insert({r.label, r.scene_id, r.flipped});
  require(bases.size() == 98, "base images: " + std::to_string(bases.size()) + " != 98");
  require(pm.records.size() == 22050, "total: " + std::to_string(pm.records.size()) + " != 22050");
  require(pm.count(Split::test) == 6300, "test: " + std::to_string(pm.count(Split::test)));
  require(pm.count(Split::train) == 15230, "train: " + std::to_string(pm.count(Split::train)));
  require(pm.count(Split::val) == 520, "val: " + std::to_string(pm.count(Split::val)));

  SynthConfig desk = desk_config().synth;
  desk.master_seed = 11;
  const auto desk_scenes = generate_scenes({desk.scenes_per_type, desk.image_size}, 11);
  const DatasetManifest dm = instantiate(standard, desk_scenes, desk);
  const int n = standard.n_classes();
  const int total = n * 2 * desk.scenes_per_type * desk.augmented_per_base;
  const int test = n * 2 * desk.test_scenes_per_type * desk.augmented_per_base;
  const int val = static_cast<int>(std::lround(desk.val_fraction * (total - test)));
  require(static_cast<int>(dm.records.size()) == total, "desk total off the closed form");
  require(dm.count(Split::test) == test, "desk test off the closed form");
  require(dm.count(Split::val) == val, "desk val off the closed form");
  require(dm.count(Split::train) == total - test - val, "desk train off the closed form");
  return "paper 98/22050/6300/15230/520; desk law exact";
}

// ------------------------------------------------------------- criterion 2

std::string check_color_gradients(Context& ctx) {
  // interior colors so central differences stay inside [0,1]
  TrafficSignStandard standard = ctx.original;
  for (int cid = 1; cid <= standard.n_classes(); ++cid)
    standard = set_color(standard, cid, {0.35 + 0.03 * cid, 0.5, 0.65 - 0.03 * cid});
  const DatasetManifest manifest = instantiate(standard, ctx.scenes, ctx.synth);

  int samples = 0;
  long probes = 0;
  double worst = 0.0;
  for (size_t i = 0; i < manifest.records.size() && samples < 24; i += 29, ++samples) {
    const SampleRecord& rec = manifest.records[i];
    std::vector<Image> tangents;
    const Image base = render_sample(rec, standard, ctx.scenes, &tangents);
    const double h = 1e-3;
    for (int ch = 0; ch < 3; ++ch) {
      RgbColor cp = standard.sign_class(rec.label).color;
      RgbColor cm = cp;
      cp[ch] += h;
      cm[ch] -= h;
      const Image ip = render_sample(rec, set_color(standard, rec.label, cp), ctx.scenes);
      const Image im = render_sample(rec, set_color(standard, rec.label, cm), ctx.scenes);
      for (int k = 0; k < base.size(); k += 11) {
        const double fd_plus = (ip.data[k] - base.data[k]) / h;
        const double fd_minus = (base.data[k] - im.data[k]) / h;
        // disagreeing one-sided diffs mean the probe straddles a clip; the
        // derivative is only defined away from those kinks
        if (std::abs(fd_plus - fd_minus) >
            1e-3 * std::max({std::abs(fd_plus), std::abs(fd_minus), 1.0}))
          continue;
        const double fd = 0.5 * (fd_plus + fd_minus);
        const double an = tangents[static_cast<size_t>(ch)].data[k];
        if (std::abs(an) < 1e-6 && std::abs(fd) < 1e-6) continue;
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
        worst = std::max(worst, rel);
        require(rel < 1e-2, "relative error " + fmt(rel) + " at sample " + std::to_string(i));
        ++probes;
      }
    }
  }
  require(samples >= 20, "only " + std::to_string(samples) + " samples checked");
  require(probes >= 200, "only " + std::to_string(probes) + " informative probes");
  return std::to_string(samples) + " samples, " + std::to_string(probes) +
         " probes, worst rel err " + fmt(worst);
}

// ------------------------------------------------------------- criterion 3

std::string check_update_rule() {
  SynthConfig synth;
  synth.scenes_per_type = 2;
  synth.augmented_per_base = 2;
  synth.test_scenes_per_type = 1;
  synth.val_fraction = 0.15;
  synth.image_size = 48;
  synth.master_seed = 19;
  const auto scenes = generate_scenes({synth.scenes_per_type, synth.image_size}, 19);

  OptimizeDeps deps;
  deps.scenes = &scenes;
  deps.synth_cfg = synth;
  deps.train_cfg.phase1_epochs = 2;
  deps.train_cfg.phase2_epochs = 1;
  deps.train_cfg.batch_size = 16;
  deps.eval_attack.m = 4;
  deps.eval_attack.stride = 16;
  deps.eval_attack.opt_steps = 1;
  deps.inner_attack_cfg.m = 1;
  deps.inner_attack_cfg.stride = 16;
  deps.inner_attack_cfg.opt_steps = 1;
  deps.pretrain_epochs = 1;

  ColorOptConfig cfg;
  cfg.iterations = 400;
  cfg.restarts = 1;
  cfg.adv_batch = 2;
  cfg.eval_samples = 4;
  cfg.seed = 23;
  cfg.init = ColorOptConfig::Init::random;

  const ColorOptResult res = color_optimize(builtin_standard(), cfg, deps);
  const RestartTrace& tr = res.restarts.at(0);
  require(tr.snapshots.size() == 400, "expected 400 snapshots");

  const int n = 7;
  std::map<int, int> visits;
  std::vector<std::array<double, 3>> prev = tr.init_colors;
  for (const ColorSnapshot& s : tr.snapshots) {
    ++visits[s.class_id];
    for (int cid = 1; cid <= n; ++cid) {
      const auto& before = prev[static_cast<size_t>(cid - 1)];
      const auto& after = s.colors[static_cast<size_t>(cid - 1)];
      for (int ch = 0; ch < 3; ++ch) {
        require(after[static_cast<size_t>(ch)] >= 0.0 && after[static_cast<size_t>(ch)] <= 1.0,
                "snapshot outside [0,1] at t=" + std::to_string(s.t));
        const double g = cid == s.class_id && !s.skipped ? s.gradient[static_cast<size_t>(ch)] : 0.0;
        const double sgn = g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0);
        const double expect = std::clamp(before[static_cast<size_t>(ch)] - 0.01 * sgn, 0.0, 1.0);
        require(std::abs(after[static_cast<size_t>(ch)] - expect) <= 1e-12,
                "update rule violated at t=" + std::to_string(s.t));
      }
    }
    prev = s.colors;
  }
  int total = 0;
  for (int cid = 1; cid <= n; ++cid) {
    const int v = visits[cid];
    total += v;
    require(v == 57 || v == 58,
            "class " + std::to_string(cid) + " visited " + std::to_string(v) + " times");
  }
  require(total == 400, "visit counts do not sum to T");
  return "T=400 trace exact to 1e-12; visit counts in {57,58}";
}

// ------------------------------------------------------------- criterion 4

std::string check_placement() {
  const RgbColor gray = {0.5, 0.5, 0.5};
  int instances = 0;
  for (std::uint64_t ms : {301ULL, 302ULL}) {
    Classifier model(Architecture::small_conv, 3, 48, ms);
    for (std::uint64_t is = 0; is < 5; ++is) {
      const Image x = random_image(48, 40 + 10 * ms + is);
      const int label = 1 + static_cast<int>(is % 3);
      const int side = patch_side(0.05, 1, 48, 48);
      const PatchPlacement got = exhaustive_placement(model, x, label, 1, side, 8, gray);
      // brute force over the stride grid
      PatchSquare best{0, 0, side};
      double best_loss = -std::numeric_limits<double>::infinity();
      for (int r = 0; r + side <= 48; r += 8)
        for (int c = 0; c + side <= 48; c += 8) {
          Image probe = x;
          for (int y = r; y < r + side; ++y)
            for (int xx = c; xx < c + side; ++xx)
              for (int ch = 0; ch < 3; ++ch) probe.at(y, xx, ch) = gray[ch];
          const double loss = model.losses({&probe}, {label})[0];
          if (loss > best_loss) {
            best_loss = loss;
            best = {r, c, side};
          }
        }
      require(got.squares.size() == 1 && got.squares[0].row == best.row &&
                  got.squares[0].col == best.col,
              "m=1 placement disagrees with brute force on instance " + std::to_string(instances));
      ++instances;
    }
  }
  require(instances >= 10, "fewer than 10 instances");

  Classifier model(Architecture::small_conv, 3, 48, 303);
  for (std::uint64_t is = 0; is < 4; ++is) {
    const Image x = random_image(48, 77 + is);
    const int side = patch_side(0.05, 4, 48, 48);
    const PatchPlacement p = exhaustive_placement(model, x, 1, 4, side, 2, gray);
    require(p.squares.size() == 4, "expected 4 squares");
    p.validate(48, 48);  // disjoint + in-bounds
    const double area = p.total_area() / (48.0 * 48.0);
    require(area >= 0.04 && area <= 0.055, "area fraction " + fmt(area) + " outside [0.04,0.055]");
  }
  return "m=1 optimal on 10 instances; m=4 disjoint, in-bounds, area ok";
}

// ------------------------------------------------------------- criterion 5

std::string check_attack_ordering(Context& ctx) {
  // Dedicated 64x64 desk variant. At 48x48 the patch-side rounding gives roa
  // 49 pixels against rp4's 4x9 = 36 at coverage 0.02 — a discretization
  // artifact with no analogue at full resolution that hands the single-patch
  // attack 36% more area. At 64x64 the rounded areas match at 5% and 8% and
  // the 2% cell slightly favors the four-patch attack, so the sweep actually
  // compares equal-coverage attacks. The inner roa attack is strengthened
  // (stride 8) so the defense it trains is worth circumventing, and the sweep
  // attacks get a finer stride and more ascent steps than the desk eval
  // defaults.
  SynthConfig synth = ctx.synth;
  synth.image_size = 64;
  synth.master_seed = derive_seed(ctx.seed, {0x4F524436ULL});
  const auto scenes =
      generate_scenes({synth.scenes_per_type, synth.image_size}, derive_seed(ctx.seed, {0x53363443ULL}));

  const DatasetManifest manifest = instantiate(ctx.original, scenes, synth);
  const LabeledImages train_set = render_split_of(manifest, ctx.original, scenes, Split::train);
  const LabeledImages test_set = render_split_of(manifest, ctx.original, scenes, Split::test);
  require(static_cast<int>(test_set.size()) >= 200, "test split smaller than 200");

  AttackConfig inner = ctx.inner_attack;
  inner.stride = 8;
  inner.opt_steps = 5;
  TrainConfig tc = ctx.train;
  tc.seed = derive_seed(ctx.seed, {0x4F524454ULL});
  Classifier model(Architecture::small_conv, ctx.original.n_classes(), synth.image_size,
                   derive_seed(ctx.seed, {0x4F52444DULL}));
  train_standard(model, train_set, tc);
  train_doa(model, train_set, tc, make_roa_inner_attack(inner));

  AttackConfig sweep_cfg = ctx.eval_attack;
  sweep_cfg.stride = 6;
  sweep_cfg.opt_steps = 20;
  const std::vector<double> coverages = {0.02, 0.05, 0.08};
  const SweepTable sweep = attack_sweep(model, test_set, {"roa", "rp4", "universal"}, coverages,
                                        sweep_cfg, 200, derive_seed(ctx.seed, {0x4F524445ULL}));

  std::map<std::pair<std::string, double>, double> success;
  for (const auto& row : sweep.rows) success[{row.attack, row.coverage}] = row.success;

  std::string detail;
  for (double c : coverages) {
    const double rp4 = success.at({"rp4", c});
    const double roa = success.at({"roa", c});
    const double uni = success.at({"universal", c});
    require(rp4 >= roa - 1e-12, "rp4 (" + fmt(rp4) + ") < roa (" + fmt(roa) + ") at coverage " +
                                    fmt(c));
    require(roa >= uni - 1e-12, "roa (" + fmt(roa) + ") < universal (" + fmt(uni) +
                                    ") at coverage " + fmt(c));
    detail += fmt(c) + ": rp4=" + fmt(rp4) + " roa=" + fmt(roa) + " uni=" + fmt(uni) + "  ";
  }
  for (const std::string attack : {"roa", "rp4", "universal"})
    for (size_t i = 1; i < coverages.size(); ++i) {
      const double lo = success.at({attack, coverages[i - 1]});
      const double hi = success.at({attack, coverages[i]});
      require(hi >= lo - 0.02 - 1e-12, attack + " success drops by more than 2 points from " +
                                           fmt(coverages[i - 1]) + " to " + fmt(coverages[i]));
    }
  return detail;
}

// ------------------------------------------------------------- criterion 6

std::string check_defense_direction(Context& ctx) {
  ctx.ensure_baseline();
  ctx.ensure_optimized();
  const double gain = ctx.joint_eval->robust_accuracy - ctx.baseline_eval->robust_accuracy;
  const double benign_drop =
      ctx.baseline_eval->benign_accuracy - ctx.joint_eval->benign_accuracy;
  const std::string detail = "baseline benign=" + fmt(ctx.baseline_eval->benign_accuracy) +
                             " robust=" + fmt(ctx.baseline_eval->robust_accuracy) +
                             "; optimized benign=" + fmt(ctx.joint_eval->benign_accuracy) +
                             " robust=" + fmt(ctx.joint_eval->robust_accuracy);
  require(gain >= 0.05 - 1e-12, "robust gain " + fmt(gain) + " < 5 points (" + detail + ")");
  require(benign_drop <= 0.01 + 1e-12, "benign drop " + fmt(benign_drop) + " > 1 point (" +
                                           detail + ")");
  return detail;
}

// ------------------------------------------------------------- criterion 7

std::string check_color_baselines(Context& ctx) {
  ctx.ensure_scratch();
  const std::uint64_t run_seed = derive_seed(ctx.seed, {0x53435241ULL});  // same as scratch
  const TrafficSignStandard random_std =
      baseline_colors(ctx.optimized->standard, "random", derive_seed(ctx.seed, {0x524EULL}));
  const TrafficSignStandard edge_std =
      baseline_colors(ctx.optimized->standard, "edge", derive_seed(ctx.seed, {0x4547ULL}));
  const EvalReport rand_eval =
      ctx.train_and_eval(random_std, Architecture::small_conv, run_seed).second;
  const EvalReport edge_eval =
      ctx.train_and_eval(edge_std, Architecture::small_conv, run_seed).second;

  const double opt = ctx.scratch_eval->robust_accuracy;
  const std::string detail = "optimized=" + fmt(opt) + " random=" + fmt(rand_eval.robust_accuracy) +
                             " edge=" + fmt(edge_eval.robust_accuracy);
  require(opt >= rand_eval.robust_accuracy - 1e-12, "below random-colors baseline (" + detail + ")");
  require(opt >= edge_eval.robust_accuracy - 1e-12, "below edge-colors baseline (" + detail + ")");
  return detail;
}

// ------------------------------------------------------------- criterion 8

std::string check_transfer(Context& ctx) {
  ctx.ensure_baseline();
  ctx.ensure_scratch();
  const double scratch = ctx.scratch_eval->robust_accuracy;
  const double joint = ctx.joint_eval->robust_accuracy;
  require(scratch >= joint - 0.05 - 1e-12,
          "scratch robust " + fmt(scratch) + " more than 5 points below joint " + fmt(joint));

  const std::uint64_t run_seed = derive_seed(ctx.seed, {0x5452414EULL});
  const EvalReport base2 =
      ctx.train_and_eval(ctx.original, Architecture::resnet_like, run_seed).second;
  const EvalReport opt2 =
      ctx.train_and_eval(ctx.optimized->standard, Architecture::resnet_like, run_seed).second;
  const double gain2 = opt2.robust_accuracy - base2.robust_accuracy;
  const std::string detail = "scratch=" + fmt(scratch) + " joint=" + fmt(joint) +
                             "; resnet gain=" + fmt(gain2) + " (base " +
                             fmt(base2.robust_accuracy) + " -> " + fmt(opt2.robust_accuracy) + ")";
  require(gain2 >= 0.03 - 1e-12, "second architecture gain " + fmt(gain2) + " < 3 points (" +
                                     detail + ")");
  return detail;
}

// ------------------------------------------------------------- criterion 9

std::string check_pgd_contract() {
  Classifier model(Architecture::small_conv, 7, 48, 401);
  const double eps = 8.0 / 255.0;
  for (std::uint64_t is = 0; is < 10; ++is) {
    const Image x = random_image(48, 600 + is);
    const int label = 1 + static_cast<int>(is % 7);

    const AttackOutcome out = pgd_linf(model, x, label, eps, 10, 2.0 / 255.0);
    for (int k = 0; k < x.size(); ++k) {
      require(std::abs(out.adversarial.data[k] - x.data[k]) <= eps,
              "L-inf bound violated on sample " + std::to_string(is));
      require(out.adversarial.data[k] >= 0.0 && out.adversarial.data[k] <= 1.0,
              "adversarial pixel outside [0,1]");
    }

    const AttackOutcome one = pgd_linf(model, x, label, eps, 1, eps);
    const Image grad = model.input_gradients({&x}, {label})[0];
    for (int k = 0; k < x.size(); ++k) {
      const double sgn = grad.data[k] > 0 ? 1.0 : (grad.data[k] < 0 ? -1.0 : 0.0);
      const double expect = std::clamp(x.data[k] + eps * sgn, 0.0, 1.0);
      require(std::abs(one.adversarial.data[k] - expect) <= 1e-12,
              "single step differs from the sign-gradient closed form");
    }
  }
  return "10 samples: bound exact, single step = closed form";
}

// ------------------------------------------------------------ criterion 10

RunConfig tiny_run_config(const std::string& out_dir) {
  RunConfig cfg = desk_config();
  cfg.master_seed = 13;
  cfg.output_dir = out_dir;
  cfg.scene.scenes_per_type = 2;
  cfg.synth.scenes_per_type = 2;
  cfg.synth.augmented_per_base = 2;
  cfg.train.phase1_epochs = 2;
  cfg.train.phase2_epochs = 1;
  cfg.train.batch_size = 16;
  cfg.pretrain_epochs = 1;
  cfg.search_phase1_epochs = 1;
  cfg.search_phase2_epochs = 1;
  cfg.search.runs_per_candidate = 1;
  cfg.color.iterations = 4;
  cfg.color.restarts = 1;
  cfg.color.adv_batch = 2;
  cfg.color.eval_samples = 4;
  cfg.eval_attack.opt_steps = 2;
  cfg.inner_attack.opt_steps = 1;
  cfg.eval_cap = 8;
  cfg.sweep_coverages = {0.02, 0.05};
  cfg.sweep_attacks = {"roa", "rp4"};
  return cfg;
}

std::string check_determinism_and_resume(Context& ctx) {
  // identical seeds -> identical manifests
  const DatasetManifest a = instantiate(ctx.original, ctx.scenes, ctx.synth);
  const DatasetManifest b = instantiate(ctx.original, ctx.scenes, ctx.synth);
  require(a.to_json().dump() == b.to_json().dump(), "manifests differ under identical seeds");

  // identical seeds -> identical attack outcomes
  Classifier model(Architecture::small_conv, 7, 48, 501);
  const Image x = random_image(48, 502);
  AttackConfig cfg;
  cfg.m = 4;
  cfg.stride = 12;
  cfg.opt_steps = 5;
  const AttackOutcome o1 = rp4_attack(model, x, 1, cfg);
  const AttackOutcome o2 = rp4_attack(model, x, 1, cfg);
  require(o1.adversarial.max_abs_diff(o2.adversarial) == 0.0 && o1.success == o2.success,
          "attack outcomes differ under identical inputs");

  // reproduce resume: byte-identical summary, no stage artifact rewritten
  const fs::path dir = fs::temp_directory_path() / "signforge_acceptance" / "tiny_run";
  fs::remove_all(dir);
  const RunConfig run_cfg = tiny_run_config(dir.string());
  const std::string first = reproduce(run_cfg).dump(2);

  std::map<std::string, fs::file_time_type> stamps;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).string();
    if (rel == "config.json" || rel == "summary.json") continue;  // rewritten in place
    stamps[rel] = fs::last_write_time(entry.path());
  }
  require(!stamps.empty(), "first run produced no artifacts");
  require(check_run_dir(dir.string()).empty(), "run directory fails validation");

  const std::string second = reproduce(run_cfg).dump(2);
  require(first == second, "resumed summary is not byte-identical");
  for (const auto& [rel, stamp] : stamps)
    require(fs::last_write_time(dir / rel) == stamp, "resume rewrote " + rel);
  return "manifests, attacks, and resumed summary identical; " +
         std::to_string(stamps.size()) + " artifacts untouched";
}

}  // namespace

int main() {
  Context ctx;
  criterion(1, "dataset count law", [] { return check_count_law(); });
  criterion(2, "color-gradient differentiability", [&] { return check_color_gradients(ctx); });
  criterion(3, "color update-rule exactness", [] { return check_update_rule(); });
  criterion(4, "placement optimality", [] { return check_placement(); });
  criterion(5, "attack ordering", [&] { return check_attack_ordering(ctx); });
  criterion(6, "defense direction", [&] { return check_defense_direction(ctx); });
  criterion(7, "color baseline ablation", [&] { return check_color_baselines(ctx); });
  criterion(8, "transfer to new training runs", [&] { return check_transfer(ctx); });
  criterion(9, "pgd l-inf contract", [] { return check_pgd_contract(); });
  criterion(10, "determinism and resume", [&] { return check_determinism_and_resume(ctx); });

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all 10 criteria passed\n";
  return 0;
}
