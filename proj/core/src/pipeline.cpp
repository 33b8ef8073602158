#include "signforge/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "signforge/attacks.hpp"
#include "signforge/augment.hpp"
#include "signforge/errors.hpp"
#include "signforge/eval.hpp"
#include "signforge/hash.hpp"
#include "signforge/optimize.hpp"
#include "signforge/png_io.hpp"
#include "signforge/rng.hpp"
#include "signforge/synth.hpp"

namespace signforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

bool stage_done(const fs::path& dir, const std::string& hash) {
  const fs::path marker = dir / ".done";
  if (!fs::exists(marker)) return false;
  try {
    return read_json_file(marker).value("config_hash", "") == hash;
  } catch (const std::exception&) {
    return false;
  }
}

void mark_done(const fs::path& dir, const std::string& stage, const std::string& hash) {
  write_json_file(dir / ".done", json{{"stage", stage}, {"config_hash", hash}});
}

json report_json(const EvalReport& rep) { return rep.to_json(); }

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

/// Standard + adversarial training from scratch; returns the trained model.
Classifier train_from_scratch(const RunConfig& cfg, const LabeledImages& train,
                              Architecture arch, int n_classes, std::uint64_t seed) {
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  if (cfg.pretrain_epochs >= 0) tc.phase1_epochs = cfg.pretrain_epochs;
  Classifier model(arch, n_classes, cfg.synth.image_size, derive_seed(seed, {0x4D4F44ULL}));
  if (tc.phase1_epochs > 0) train_standard(model, train, tc);
  if (tc.phase2_epochs > 0) train_doa(model, train, tc, make_roa_inner_attack(cfg.inner_attack));
  return model;
}

EvalReport eval_model(const RunConfig& cfg, Classifier& model, const LabeledImages& test,
                      std::uint64_t seed) {
  const int cap = std::min(cfg.eval_cap, static_cast<int>(test.size()));
  return robust_accuracy(model, test, "rp4", cfg.eval_attack, cap, nullptr, seed);
}

struct StageRunner {
  fs::path root;
  std::string hash;

  /// Runs `body` unless the stage already completed under this config hash.
  /// `body` returns true if it did the work (false: loaded from disk).
  template <typename F>
  void run(const std::string& stage, F&& body) {
    const fs::path dir = root / stage;
    fs::create_directories(dir);
    const bool done = stage_done(dir, hash);
    std::cout << "[signforge] stage " << stage << (done ? " (cached)" : "") << "\n";
    try {
      body(dir, done);
    } catch (const std::exception& e) {
      throw StageError("stage '" + stage + "' failed (config " + hash + "): " + e.what());
    }
    if (!done) mark_done(dir, stage, hash);
  }
};

}  // namespace

const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> stages = {"scenes",    "data_original", "baseline",
                                                  "optimize",  "data_optimized", "scratch",
                                                  "sweeps",    "transfer"};
  return stages;
}

json reproduce(const RunConfig& config) {
  config.validate();
  const fs::path root = config.output_dir;
  fs::create_directories(root);
  config.save((root / "config.json").string());
  const std::string hash = config.hash();
  StageRunner runner{root, hash};

  const TrafficSignStandard original = builtin_standard();
  const PictogramPool pool = builtin_pool();
  const int n = original.n_classes();

  // Pure stages are regenerated in memory on every invocation; their disk
  // artifacts are previews for inspection.
  const std::uint64_t scene_seed = derive_seed(config.master_seed, {0x5343454EULL});
  const std::vector<ContextScene> scenes = generate_scenes(config.scene, scene_seed);
  runner.run("scenes", [&](const fs::path& dir, bool done) {
    if (done) return;
    json index = json::array();
    for (const auto& s : scenes) {
      char name[64];
      std::snprintf(name, sizeof(name), "scene_%03d_%s.png", s.scene_id,
                    s.flipped ? "flip" : "base");
      write_png(s.background, (dir / name).string());
      index.push_back({{"scene_id", s.scene_id},
                       {"type", to_string(s.scene_type)},
                       {"flipped", s.flipped},
                       {"image", name}});
    }
    write_json_file(dir / "scenes.json", index);
  });

  SynthConfig synth_orig = config.synth;
  synth_orig.master_seed = derive_seed(config.master_seed, {0x44415441ULL, 1});
  const DatasetManifest manifest_orig = instantiate(original, scenes, synth_orig);
  runner.run("data_original", [&](const fs::path& dir, bool done) {
    if (done) return;
    save_standard(original, (dir / "standard" / "standard.json").string());
    materialize(manifest_orig, original, scenes, dir.string(), false);
  });

  // --- baseline: adversarial training on the original standard
  EvalReport baseline_report;
  runner.run("baseline", [&](const fs::path& dir, bool done) {
    if (done) {
      baseline_report = EvalReport{};
      const json j = read_json_file(dir / "report.json");
      baseline_report.benign_accuracy = j.at("benign_accuracy").get<double>();
      baseline_report.robust_accuracy = j.at("robust_accuracy").get<double>();
      return;
    }
    const LabeledImages train = render_split_of(manifest_orig, original, scenes, Split::train);
    const LabeledImages test = render_split_of(manifest_orig, original, scenes, Split::test);
    Classifier model = train_from_scratch(config, train, config.architecture, n,
                                          derive_seed(config.master_seed, {0x42415345ULL}));
    baseline_report = eval_model(config, model, test, derive_seed(config.master_seed, {1}));
    save_checkpoint(model, (dir / "model.ckpt").string(), json{{"config_hash", hash}});
    write_json_file(dir / "report.json", report_json(baseline_report));
  });

  // --- optimize: greedy pictograms + color loop over all classes
  TrafficSignStandard greedy_std = original;
  TrafficSignStandard optimized = original;
  EvalReport joint_report;
  runner.run("optimize", [&](const fs::path& dir, bool done) {
    if (done) {
      greedy_std = load_standard((dir / "standard_greedy" / "standard.json").string());
      optimized = load_standard((dir / "standard_optimized" / "standard.json").string());
      const json j = read_json_file(dir / "report.json");
      joint_report.benign_accuracy = j.at("benign_accuracy").get<double>();
      joint_report.robust_accuracy = j.at("robust_accuracy").get<double>();
      return;
    }
    OptimizeDeps deps = config.make_deps(scenes);
    PictogramSearchConfig search = config.search;
    search.seed = derive_seed(config.master_seed, {0x53524348ULL});
    ColorOptConfig color = config.color;
    color.seed = derive_seed(config.master_seed, {0x434F4C52ULL});
    const OptimizeStandardResult result =
        optimize_standard(original, pool, n, search, color, deps);

    greedy_std = result.greedy.standard;
    optimized = result.standard;
    save_standard(greedy_std, (dir / "standard_greedy" / "standard.json").string());
    save_standard(optimized, (dir / "standard_optimized" / "standard.json").string());
    write_json_file(dir / "greedy_trace.json", greedy_trace_to_json(result.greedy));
    {
      std::ofstream trace(dir / "color_trace.jsonl");
      for (const auto& rt : result.colors.restarts) trace << trace_to_json(rt).dump() << "\n";
    }

    Classifier joint = result.colors.rebuild_model(n);
    SynthConfig sc = config.synth;
    sc.master_seed = derive_seed(config.master_seed, {0x44415441ULL, 2});
    const DatasetManifest mopt = instantiate(optimized, scenes, sc);
    const LabeledImages test = render_split_of(mopt, optimized, scenes, Split::test);
    joint_report = eval_model(config, joint, test, derive_seed(config.master_seed, {2}));
    save_checkpoint(joint, (dir / "model.ckpt").string(), json{{"config_hash", hash}});
    write_json_file(dir / "report.json", report_json(joint_report));
  });

  SynthConfig synth_opt = config.synth;
  synth_opt.master_seed = derive_seed(config.master_seed, {0x44415441ULL, 2});
  const DatasetManifest manifest_opt = instantiate(optimized, scenes, synth_opt);
  runner.run("data_optimized", [&](const fs::path& dir, bool done) {
    if (done) return;
    materialize(manifest_opt, optimized, scenes, dir.string(), false);
  });

  // --- scratch: retrain the primary architecture on the optimized standard
  EvalReport scratch_report;
  runner.run("scratch", [&](const fs::path& dir, bool done) {
    if (done) {
      const json j = read_json_file(dir / "report.json");
      scratch_report.benign_accuracy = j.at("benign_accuracy").get<double>();
      scratch_report.robust_accuracy = j.at("robust_accuracy").get<double>();
      return;
    }
    const LabeledImages train = render_split_of(manifest_opt, optimized, scenes, Split::train);
    const LabeledImages test = render_split_of(manifest_opt, optimized, scenes, Split::test);
    Classifier model = train_from_scratch(config, train, config.architecture, n,
                                          derive_seed(config.master_seed, {0x53435241ULL}));
    scratch_report = eval_model(config, model, test, derive_seed(config.master_seed, {3}));
    save_checkpoint(model, (dir / "model.ckpt").string(), json{{"config_hash", hash}});
    write_json_file(dir / "report.json", report_json(scratch_report));
  });

  // --- sweeps: coverage sweep on the baseline model + optimized-class sweep
  SweepTable sweep;
  KSweepTable ksweep;
  runner.run("sweeps", [&](const fs::path& dir, bool done) {
    if (done) {
      sweep = SweepTable::load_csv((dir / "sweep.csv").string());
      ksweep = KSweepTable::load_csv((dir / "ksweep.csv").string());
      return;
    }
    Classifier baseline = load_checkpoint((root / "baseline" / "model.ckpt").string());
    const LabeledImages test = render_split_of(manifest_orig, original, scenes, Split::test);
    const int cap = std::min(config.eval_cap, static_cast<int>(test.size()));
    sweep = attack_sweep(baseline, test, config.sweep_attacks, config.sweep_coverages,
                         config.eval_attack, cap, derive_seed(config.master_seed, {4}));
    sweep.save_csv((dir / "sweep.csv").string());
    plot_sweep(sweep, (dir / "sweep.png").string());

    // The class sweep runs the endpoints only: k = 0 is the baseline by
    // definition; the main optimize stage covers k = n for the configured
    // init, and the other init gets a single-restart run.
    const std::string main_init =
        config.color.init == ColorOptConfig::Init::static_gray ? "static_gray" : "random";
    const std::string other_init = main_init == "random" ? "static_gray" : "random";
    ksweep.rows.push_back(
        {0, "static_gray", baseline_report.benign_accuracy, baseline_report.robust_accuracy});
    ksweep.rows.push_back(
        {0, "random", baseline_report.benign_accuracy, baseline_report.robust_accuracy});
    ksweep.rows.push_back(
        {n, main_init, joint_report.benign_accuracy, joint_report.robust_accuracy});

    OptimizeDeps deps = config.make_deps(scenes);
    ColorOptConfig alt = config.color;
    alt.init = other_init == "random" ? ColorOptConfig::Init::random
                                      : ColorOptConfig::Init::static_gray;
    alt.restarts = 1;
    alt.seed = derive_seed(config.master_seed, {0x4B414C54ULL});
    const ColorOptResult alt_result = color_optimize(greedy_std, alt, deps);
    Classifier alt_model = alt_result.rebuild_model(n);
    SynthConfig sc = config.synth;
    sc.master_seed = derive_seed(config.master_seed, {0x44415441ULL, 3});
    const DatasetManifest malt = instantiate(alt_result.standard, scenes, sc);
    const LabeledImages alt_test = render_split_of(malt, alt_result.standard, scenes, Split::test);
    const EvalReport alt_rep =
        eval_model(config, alt_model, alt_test, derive_seed(config.master_seed, {5}));
    ksweep.rows.push_back({n, other_init, alt_rep.benign_accuracy, alt_rep.robust_accuracy});

    ksweep.save_csv((dir / "ksweep.csv").string());
    plot_k_sweep(ksweep, (dir / "ksweep.png").string());
  });

  // --- transfer: a second architecture, original vs optimized standard
  std::vector<TransferRow> transfer;
  runner.run("transfer", [&](const fs::path& dir, bool done) {
    if (done) {
      const json j = read_json_file(dir / "transfer.json");
      for (const auto& r : j)
        transfer.push_back({r.at("architecture").get<std::string>(),
                            r.at("standard").get<std::string>(), r.at("benign").get<double>(),
                            r.at("robust").get<double>()});
      return;
    }
    OptimizeDeps deps = config.make_deps(scenes);
    transfer = transfer_eval(original, optimized, {config.transfer_architecture}, deps,
                             config.eval_cap, derive_seed(config.master_seed, {6}));
    save_transfer_csv(transfer, (dir / "transfer.csv").string());
    json j = json::array();
    for (const auto& r : transfer)
      j.push_back({{"architecture", r.architecture},
                   {"standard", r.standard},
                   {"benign", r.benign},
                   {"robust", r.robust}});
    write_json_file(dir / "transfer.json", j);
  });

  json sweep_rows = json::array();
  for (const auto& r : sweep.rows)
    sweep_rows.push_back(
        {{"attack", r.attack}, {"coverage", r.coverage}, {"robust", r.robust}});
  json ksweep_rows = json::array();
  for (const auto& r : ksweep.rows)
    ksweep_rows.push_back({{"k", r.k}, {"init", r.init}, {"benign", r.benign}, {"robust", r.robust}});
  json transfer_rows = json::array();
  for (const auto& r : transfer)
    transfer_rows.push_back({{"architecture", r.architecture},
                             {"standard", r.standard},
                             {"benign", r.benign},
                             {"robust", r.robust}});

  const json summary = {
      {"config_hash", hash},
      {"baseline",
       {{"benign", baseline_report.benign_accuracy}, {"robust", baseline_report.robust_accuracy}}},
      {"joint_optimized",
       {{"benign", joint_report.benign_accuracy}, {"robust", joint_report.robust_accuracy}}},
      {"scratch_on_optimized",
       {{"benign", scratch_report.benign_accuracy}, {"robust", scratch_report.robust_accuracy}}},
      {"robust_gain", joint_report.robust_accuracy - baseline_report.robust_accuracy},
      {"sweep", sweep_rows},
      {"ksweep", ksweep_rows},
      {"transfer", transfer_rows},
  };
  write_json_file(root / "summary.json", summary);
  return summary;
}

std::vector<std::string> check_run_dir(const std::string& run_dir) {
  std::vector<std::string> problems;
  const fs::path root = run_dir;
  if (!fs::exists(root / "config.json")) {
    problems.push_back("missing config.json");
    return problems;
  }
  std::string hash;
  try {
    hash = RunConfig::load((root / "config.json").string()).hash();
  } catch (const std::exception& e) {
    problems.push_back(std::string("invalid config.json: ") + e.what());
    return problems;
  }

  static const std::map<std::string, std::vector<std::string>> artifacts = {
      {"scenes", {"scenes.json"}},
      {"data_original", {"manifest.json", "standard/standard.json"}},
      {"baseline", {"model.ckpt", "report.json"}},
      {"optimize",
       {"standard_greedy/standard.json", "standard_optimized/standard.json", "greedy_trace.json",
        "color_trace.jsonl", "model.ckpt", "report.json"}},
      {"data_optimized", {"manifest.json"}},
      {"scratch", {"model.ckpt", "report.json"}},
      {"sweeps", {"sweep.csv", "sweep.png", "ksweep.csv", "ksweep.png"}},
      {"transfer", {"transfer.csv", "transfer.json"}},
  };

  for (const std::string& stage : pipeline_stages()) {
    const fs::path dir = root / stage;
    const fs::path marker = dir / ".done";
    if (!fs::exists(marker)) continue;  // stage not run: nothing to validate
    json j;
    try {
      j = read_json_file(marker);
    } catch (const std::exception&) {
      problems.push_back(stage + ": unreadable .done marker");
      continue;
    }
    if (j.value("config_hash", "") != hash)
      problems.push_back(stage + ": config hash mismatch (have " + j.value("config_hash", "?") +
                         ", expected " + hash + ")");
    for (const std::string& rel : artifacts.at(stage))
      if (!fs::exists(dir / rel)) problems.push_back(stage + ": missing artifact " + rel);
  }
  return problems;
}

std::string version_and_provenance() {
  std::string out;
  out += "signforge " + std::string(kVersion) + "\n";
  out += "config hash: fnv1a64 over canonical (sorted-key) JSON, 16 hex digits\n";
  out += "attacks:";
  for (const auto& id : registered_attacks())
    out += " " + id + (id == "dorpatch" ? "(unimplemented)" : "");
  out += "\naugmentations:";
  for (const auto& id : registered_augmentations()) out += " " + id;
  out += "\n";
  return out;
}

}  // namespace signforge
