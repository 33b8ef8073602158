#include "signforge/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/rng.hpp"

namespace signforge {

using nlohmann::json;

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

struct EvalRun {
  double robust = 0.0;
  std::vector<double> per_class;  // indexed class_id - 1
};

LabeledImages render_split(const DatasetManifest& manifest, const TrafficSignStandard& standard,
                           const std::vector<ContextScene>& scenes, Split split) {
  LabeledImages out;
  for (int idx : manifest.indices(split)) {
    const SampleRecord& rec = manifest.records[static_cast<size_t>(idx)];
    out.images.push_back(render_sample(rec, standard, scenes));
    out.labels.push_back(rec.label);
  }
  return out;
}

/// Robust accuracy on at most `cap` samples (cap <= 0: all).
EvalRun robust_eval(Classifier& model, const LabeledImages& data, const AttackConfig& attack,
                    int cap, int n_classes) {
  EvalRun run;
  run.per_class.assign(static_cast<size_t>(n_classes), 0.0);
  std::vector<int> class_total(static_cast<size_t>(n_classes), 0);
  const size_t n = cap > 0 ? std::min(data.size(), static_cast<size_t>(cap)) : data.size();
  if (n == 0) throw ConfigError("robust_eval: no samples");
  int correct = 0;
  for (size_t i = 0; i < n; ++i) {
    const AttackOutcome out = rp4_attack(model, data.images[i], data.labels[i], attack);
    const size_t c = static_cast<size_t>(data.labels[i] - 1);
    ++class_total[c];
    if (!out.success) {
      ++correct;
      run.per_class[c] += 1.0;
    }
  }
  for (size_t c = 0; c < run.per_class.size(); ++c)
    if (class_total[c] > 0) run.per_class[c] /= class_total[c];
  run.robust = static_cast<double>(correct) / static_cast<double>(n);
  return run;
}

EvalRun train_and_eval(const TrafficSignStandard& standard, const OptimizeDeps& deps,
                       const AttackConfig& eval_attack, int eval_samples, std::uint64_t run_seed) {
  SynthConfig sc = deps.synth_cfg;
  sc.master_seed = derive_seed(run_seed, {0x44415441ULL});
  const DatasetManifest manifest = instantiate(standard, *deps.scenes, sc);
  const LabeledImages train = render_split(manifest, standard, *deps.scenes, Split::train);
  const LabeledImages val = render_split(manifest, standard, *deps.scenes, Split::val);

  TrainConfig tc = deps.train_cfg;
  tc.seed = run_seed;
  if (deps.search_phase1_epochs >= 0) tc.phase1_epochs = deps.search_phase1_epochs;
  if (deps.search_phase2_epochs >= 0) tc.phase2_epochs = deps.search_phase2_epochs;

  Classifier model(deps.arch, standard.n_classes(), sc.image_size,
                   derive_seed(run_seed, {0x4D4F44ULL}));
  if (tc.phase1_epochs > 0) train_standard(model, train, tc);
  if (tc.phase2_epochs > 0)
    train_doa(model, train, tc, make_roa_inner_attack(deps.inner_attack_cfg));
  return robust_eval(model, val, eval_attack, eval_samples, standard.n_classes());
}

std::array<double, 3> color_as_array(const RgbColor& c) { return {c.r, c.g, c.b}; }

}  // namespace

// ----------------------------------------------------------------- configs

void PictogramSearchConfig::validate() const {
  if (runs_per_candidate < 1) throw ConfigError("runs_per_candidate must be >= 1");
  eval_attack.validate();
}

void ColorOptConfig::validate() const {
  if (iterations < 1) throw ConfigError("color opt: iterations must be >= 1");
  if (epoch_fraction <= 0.0 || epoch_fraction > 1.0)
    throw ConfigError("color opt: epoch_fraction must lie in (0,1]");
  if (alpha <= 0.0) throw ConfigError("color opt: alpha must be positive");
  if (restarts < 1) throw ConfigError("color opt: restarts must be >= 1");
  if (adv_batch < 1) throw ConfigError("color opt: adv_batch must be >= 1");
}

// --------------------------------------------------------- pictogram search

GreedyResult greedy_pictogram_search(const TrafficSignStandard& standard,
                                     const PictogramPool& pool,
                                     const std::vector<int>& class_order,
                                     const PictogramSearchConfig& cfg,
                                     const CandidateEvaluator& evaluate) {
  cfg.validate();
  standard.validate();
  if (!evaluate) throw ConfigError("greedy search: missing evaluator");

  GreedyResult result;
  result.standard = standard;
  result.class_visit_order = class_order;
  for (int class_id : class_order) {
    const int m = pool.pool_size(class_id);
    if (m < 1) throw ConfigError("greedy search: empty pool for class " + std::to_string(class_id));
    int best_cand = 0;
    double best_mean = -1.0;
    for (int cand = 1; cand <= m; ++cand) {
      const TrafficSignStandard trial = set_pictogram(result.standard, class_id, cand, pool);
      GreedyTraceEntry entry;
      entry.class_id = class_id;
      entry.candidate = cand;
      for (int r = 0; r < cfg.runs_per_candidate; ++r) {
        const std::uint64_t run_seed = derive_seed(
            cfg.seed, {static_cast<std::uint64_t>(class_id), static_cast<std::uint64_t>(cand),
                       static_cast<std::uint64_t>(r)});
        entry.run_accuracies.push_back(evaluate(trial, class_id, cand, run_seed));
        ++result.runs_executed;
      }
      entry.mean_accuracy =
          std::accumulate(entry.run_accuracies.begin(), entry.run_accuracies.end(), 0.0) /
          static_cast<double>(entry.run_accuracies.size());
      if (entry.mean_accuracy > best_mean) {  // strict: ties keep the lowest index
        best_mean = entry.mean_accuracy;
        best_cand = cand;
      }
      result.trace.push_back(std::move(entry));
    }
    result.standard = set_pictogram(result.standard, class_id, best_cand, pool);
    result.chosen.push_back(best_cand);
  }
  return result;
}

// ------------------------------------------------------- training plumbing

InnerAttack make_roa_inner_attack(const AttackConfig& cfg) {
  AttackConfig roa = cfg;
  roa.m = 1;
  roa.bw_constraint = false;
  return [roa](Classifier& model, std::vector<Image>& batch, const std::vector<int>& labels,
               std::uint64_t) {
    for (size_t i = 0; i < batch.size(); ++i)
      batch[i] = roa_attack(model, batch[i], labels[i], roa).adversarial;
  };
}

CandidateEvaluator make_training_evaluator(const OptimizeDeps& deps,
                                           const AttackConfig& eval_attack, int eval_samples) {
  if (deps.scenes == nullptr) throw ConfigError("training evaluator: missing scenes");
  return [deps, eval_attack, eval_samples](const TrafficSignStandard& standard, int, int,
                                           std::uint64_t run_seed) {
    return train_and_eval(standard, deps, eval_attack, eval_samples, run_seed).robust;
  };
}

// ------------------------------------------------------ color optimization

Classifier ColorOptResult::rebuild_model(int n_classes) const {
  Classifier model(arch, n_classes, image_size, 0);
  if (model_params.size() != model.net().flat_params().size())
    throw ConfigError("rebuild_model: parameter count mismatch");
  model.net().set_flat_params(model_params);
  return model;
}

ColorOptResult color_optimize(const TrafficSignStandard& standard, const ColorOptConfig& cfg,
                              const OptimizeDeps& deps) {
  cfg.validate();
  standard.validate();
  if (deps.scenes == nullptr) throw ConfigError("color_optimize: missing scenes");

  std::vector<int> subset = cfg.class_subset;
  if (subset.empty())
    for (const auto& c : standard.classes) subset.push_back(c.class_id);
  for (int cid : subset) standard.sign_class(cid);  // throws on unknown id
  const int k = static_cast<int>(subset.size());
  const int n_classes = standard.n_classes();

  ColorOptResult result;
  result.arch = deps.arch;
  result.image_size = deps.synth_cfg.image_size;
  result.standard = standard;
  result.chosen_restart = -1;
  double best_robust = -1.0;

  for (int r = 0; r < cfg.restarts; ++r) {
    const std::uint64_t rs = derive_seed(cfg.seed, {0x434F4C4FULL, static_cast<std::uint64_t>(r)});
    Rng rng(rs);
    RestartTrace trace;
    trace.seed = rs;

    TrafficSignStandard S = standard;
    for (int cid : subset) {
      RgbColor c{0.5, 0.5, 0.5};
      if (cfg.init == ColorOptConfig::Init::random)
        c = {rng.uniform(), rng.uniform(), rng.uniform()};
      S = set_color(S, cid, c);
    }

    for (const auto& sc2 : S.classes) trace.init_colors.push_back(color_as_array(sc2.color));

    SynthConfig sc = deps.synth_cfg;
    sc.master_seed = derive_seed(rs, {0x44415441ULL});
    const DatasetManifest manifest = instantiate(S, *deps.scenes, sc);

    // Train images are rendered once and refreshed per class after each
    // color update; the manifest (scenes, chains, splits) is fixed for the
    // whole restart, so only the pixels depend on the evolving colors.
    const std::vector<int> train_idx = manifest.indices(Split::train);
    LabeledImages train;
    std::vector<std::vector<size_t>> by_class(static_cast<size_t>(n_classes) + 1);
    for (int idx : train_idx) {
      const SampleRecord& rec = manifest.records[static_cast<size_t>(idx)];
      train.images.push_back(render_sample(rec, S, *deps.scenes));
      train.labels.push_back(rec.label);
      by_class[static_cast<size_t>(rec.label)].push_back(train.images.size() - 1);
    }
    for (int cid : subset)
      if (by_class[static_cast<size_t>(cid)].empty())
        throw ConfigError("color_optimize: class " + std::to_string(cid) + " has no train samples");
    LabeledImages val = render_split(manifest, S, *deps.scenes, Split::val);

    TrainConfig tc = deps.train_cfg;
    tc.seed = rs;
    Classifier model(deps.arch, n_classes, sc.image_size, derive_seed(rs, {0x4D4F44ULL}));
    const int pre = deps.pretrain_epochs >= 0 ? deps.pretrain_epochs : tc.phase1_epochs;
    if (pre > 0) {
      TrainConfig ptc = tc;
      ptc.phase1_epochs = pre;
      train_standard(model, train, ptc);
    }
    const InnerAttack inner = make_roa_inner_attack(deps.inner_attack_cfg);
    TrainerState state;
    // one triangular cycle across the whole color-optimization run
    const long bpe = static_cast<long>((train.images.size() + tc.batch_size - 1) / tc.batch_size);
    state.cycle_steps = static_cast<long>(cfg.iterations) *
                        static_cast<long>(std::ceil(cfg.epoch_fraction * static_cast<double>(bpe)));

    auto rerender_class = [&](int cid) {
      for (size_t pos : by_class[static_cast<size_t>(cid)]) {
        const SampleRecord& rec = manifest.records[static_cast<size_t>(train_idx[pos])];
        train.images[pos] = render_sample(rec, S, *deps.scenes);
      }
    };

    for (int t = 1; t <= cfg.iterations; ++t) {
      const int residue = t % k;
      const int class_id = subset[static_cast<size_t>(residue == 0 ? k - 1 : residue - 1)];

      train_fraction(model, train, cfg.epoch_fraction, tc, inner, state);

      // Attack a batch of class samples; the color gradient averages
      // <dL/dx, tangent> over the successful attacks, excluding pixels the
      // patches overwrote (those no longer depend on the color).
      std::vector<size_t> picks = by_class[static_cast<size_t>(class_id)];
      shuffle_vec(picks, rng);
      if (picks.size() > static_cast<size_t>(cfg.adv_batch))
        picks.resize(static_cast<size_t>(cfg.adv_batch));

      std::vector<Image> adv;
      std::vector<std::vector<Image>> tangents;
      std::vector<PatchPlacement> placements;
      for (size_t pos : picks) {
        const SampleRecord& rec = manifest.records[static_cast<size_t>(train_idx[pos])];
        std::vector<Image> tang;
        const Image x = render_sample(rec, S, *deps.scenes, &tang);
        AttackOutcome out = rp4_attack(model, x, rec.label, deps.eval_attack);
        if (!out.success || !out.placement) continue;
        adv.push_back(std::move(out.adversarial));
        tangents.push_back(std::move(tang));
        placements.push_back(std::move(*out.placement));
      }

      ColorSnapshot snap;
      snap.t = t;
      snap.class_id = class_id;

      if (adv.empty()) {
        snap.skipped = true;
      } else {
        std::vector<const Image*> adv_ptrs;
        std::vector<int> labels(adv.size(), class_id);
        for (const Image& im : adv) adv_ptrs.push_back(&im);
        Eigen::VectorXd losses;
        const std::vector<Image> grads = model.input_gradients(adv_ptrs, labels, &losses);
        snap.batch_loss = losses.mean();

        std::array<double, 3> g{0.0, 0.0, 0.0};
        for (size_t s = 0; s < grads.size(); ++s) {
          const Image& dldx = grads[s];
          for (int ch = 0; ch < 3; ++ch) {
            const Image& tan = tangents[s][static_cast<size_t>(ch)];
            double acc = 0.0;
            for (int y = 0; y < dldx.h; ++y)
              for (int x2 = 0; x2 < dldx.w; ++x2) {
                if (placements[s].contains(y, x2)) continue;
                for (int c = 0; c < 3; ++c) acc += dldx.at(y, x2, c) * tan.at(y, x2, c);
              }
            g[static_cast<size_t>(ch)] += acc;
          }
        }
        for (double& v : g) v /= static_cast<double>(grads.size());
        snap.gradient = g;

        RgbColor c = S.sign_class(class_id).color;
        for (int ch = 0; ch < 3; ++ch) c[ch] -= cfg.alpha * sgn(g[static_cast<size_t>(ch)]);
        S = set_color(S, class_id, c);  // set_color clips into [0,1]
        rerender_class(class_id);
      }

      for (const auto& sc2 : S.classes) snap.colors.push_back(color_as_array(sc2.color));
      trace.snapshots.push_back(std::move(snap));

      if (cfg.eval_every > 0 && t % cfg.eval_every == 0) {
        val = render_split(manifest, S, *deps.scenes, Split::val);
        PeriodicEval pe;
        pe.t = t;
        pe.benign = evaluate_benign(model, val);
        pe.robust = robust_eval(model, val, deps.eval_attack, cfg.eval_samples, n_classes).robust;
        trace.evals.push_back(pe);
      }
    }

    val = render_split(manifest, S, *deps.scenes, Split::val);
    trace.final_benign = evaluate_benign(model, val);
    trace.final_robust = robust_eval(model, val, deps.eval_attack, cfg.eval_samples, n_classes).robust;
    for (const auto& sc2 : S.classes) trace.final_colors.push_back(color_as_array(sc2.color));

    if (trace.final_robust > best_robust) {  // strict: ties keep the lowest index
      best_robust = trace.final_robust;
      result.chosen_restart = r;
      result.standard = S;
      result.model_params = model.net().flat_params();
    }
    result.restarts.push_back(std::move(trace));
  }
  return result;
}

// -------------------------------------------------------------- full driver

OptimizeStandardResult optimize_standard(const TrafficSignStandard& standard,
                                         const PictogramPool& pool, int k,
                                         const PictogramSearchConfig& search_cfg,
                                         const ColorOptConfig& color_cfg,
                                         const OptimizeDeps& deps) {
  standard.validate();
  if (k < 0 || k > standard.n_classes())
    throw ConfigError("optimize_standard: k must lie in [0, n_classes]");

  OptimizeStandardResult out;
  if (k == 0) {
    out.standard = standard;
    out.greedy.standard = standard;
    out.colors.standard = standard;
    out.colors.arch = deps.arch;
    out.colors.image_size = deps.synth_cfg.image_size;
    return out;
  }

  std::vector<int> order;
  for (int cid = 1; cid <= k; ++cid) order.push_back(cid);
  if (search_cfg.class_order == PictogramSearchConfig::Order::random) {
    Rng rng(derive_seed(search_cfg.seed, {0x4F524445ULL}));
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int>(i)));
      std::swap(order[i - 1], order[j]);
    }
  } else {  // worst_first: one training run scores the original standard
    const EvalRun base = train_and_eval(standard, deps, search_cfg.eval_attack,
                                        color_cfg.eval_samples,
                                        derive_seed(search_cfg.seed, {0x574F5253ULL}));
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return base.per_class[static_cast<size_t>(a - 1)] < base.per_class[static_cast<size_t>(b - 1)];
    });
  }

  const CandidateEvaluator evaluator =
      make_training_evaluator(deps, search_cfg.eval_attack, color_cfg.eval_samples);
  out.greedy = greedy_pictogram_search(standard, pool, order, search_cfg, evaluator);

  ColorOptConfig cc = color_cfg;
  cc.class_subset.clear();
  for (int cid = 1; cid <= k; ++cid) cc.class_subset.push_back(cid);
  out.colors = color_optimize(out.greedy.standard, cc, deps);
  out.standard = out.colors.standard;
  return out;
}

TrafficSignStandard baseline_colors(const TrafficSignStandard& standard, const std::string& mode,
                                    std::uint64_t seed) {
  standard.validate();
  TrafficSignStandard out = standard;
  Rng rng(derive_seed(seed, {0x42415345ULL}));
  if (mode == "random") {
    for (const auto& c : standard.classes)
      out = set_color(out, c.class_id, {rng.uniform(), rng.uniform(), rng.uniform()});
  } else if (mode == "edge") {
    // The binary RGB corners minus white: only 7 are available.
    std::vector<RgbColor> corners = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                     {1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
    if (standard.n_classes() > static_cast<int>(corners.size()))
      throw ConfigError("edge baseline supports at most 7 classes");
    shuffle_vec(corners, rng);
    for (const auto& c : standard.classes)
      out = set_color(out, c.class_id, corners[static_cast<size_t>(c.class_id - 1)]);
  } else {
    throw ConfigError("unknown color baseline: " + mode);
  }
  return out;
}

// ------------------------------------------------------------ trace export

json trace_to_json(const RestartTrace& trace) {
  json snaps = json::array();
  for (const auto& s : trace.snapshots) {
    json colors = json::array();
    for (const auto& c : s.colors) colors.push_back({c[0], c[1], c[2]});
    snaps.push_back({{"t", s.t},
                     {"class_id", s.class_id},
                     {"gradient", {s.gradient[0], s.gradient[1], s.gradient[2]}},
                     {"colors", colors},
                     {"batch_loss", s.batch_loss},
                     {"skipped", s.skipped}});
  }
  json evals = json::array();
  for (const auto& e : trace.evals)
    evals.push_back({{"t", e.t}, {"benign", e.benign}, {"robust", e.robust}});
  json final_colors = json::array();
  for (const auto& c : trace.final_colors) final_colors.push_back({c[0], c[1], c[2]});
  json init_colors = json::array();
  for (const auto& c : trace.init_colors) init_colors.push_back({c[0], c[1], c[2]});
  return json{{"seed", trace.seed},
              {"init_colors", init_colors},
              {"snapshots", snaps},
              {"evals", evals},
              {"final_benign", trace.final_benign},
              {"final_robust", trace.final_robust},
              {"final_colors", final_colors}};
}

json greedy_trace_to_json(const GreedyResult& result) {
  json entries = json::array();
  for (const auto& e : result.trace)
    entries.push_back({{"class_id", e.class_id},
                       {"candidate", e.candidate},
                       {"run_accuracies", e.run_accuracies},
                       {"mean_accuracy", e.mean_accuracy}});
  return json{{"entries", entries},
              {"chosen", result.chosen},
              {"class_visit_order", result.class_visit_order},
              {"runs_executed", result.runs_executed}};
}

}  // namespace signforge
