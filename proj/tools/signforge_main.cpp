// signforge: adversarially robust traffic-sign standard toolkit.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "signforge/attacks.hpp"
#include "signforge/errors.hpp"
#include "signforge/eval.hpp"
#include "signforge/optimize.hpp"
#include "signforge/pipeline.hpp"
#include "signforge/png_io.hpp"
#include "signforge/rng.hpp"
#include "signforge/runconfig.hpp"
#include "signforge/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace signforge;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitUnimplemented = 4;

struct CommonArgs {
  std::string config_path;
  std::string output;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run config JSON (defaults: desk profile)");
  cmd->add_option("--out", args.output, "output path (overrides config output_dir)");
  cmd->add_option("--seed", args.seed, "master seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_flag("--paper-scale", args.paper_scale, "full-scale protocol parameters");
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? desk_config() : RunConfig::load(args.config_path);
  // flag overrides win over file values
  if (args.seed_set) cfg.master_seed = args.seed;
  if (!args.output.empty()) cfg.output_dir = args.output;
  if (args.paper_scale) {
    cfg.paper_scale = true;
    cfg.apply_paper_scale();
  }
  cfg.validate();
  return cfg;
}

std::vector<ContextScene> scenes_for(const RunConfig& cfg) {
  return generate_scenes(cfg.scene, derive_seed(cfg.master_seed, {0x5343454EULL}));
}

TrafficSignStandard standard_from(const std::string& path) {
  return path.empty() ? builtin_standard() : load_standard(path);
}

LabeledImages render_split_images(const DatasetManifest& manifest,
                                  const TrafficSignStandard& standard,
                                  const std::vector<ContextScene>& scenes, Split split) {
  LabeledImages out;
  for (int idx : manifest.indices(split)) {
    const SampleRecord& rec = manifest.records[static_cast<size_t>(idx)];
    out.images.push_back(render_sample(rec, standard, scenes));
    out.labels.push_back(rec.label);
  }
  return out;
}

void write_json_file(const std::string& path, const json& j) {
  const fs::path p(path);
  if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"signforge: joint optimization of traffic-sign standards and classifiers "
               "against adversarial patch attacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_and_provenance());

  CommonArgs args;
  std::string standard_path, manifest_path, checkpoint_path, attack_id = "rp4", run_dir;
  std::string split_name = "test", mode = "both", init_mode;
  int k = -1, sample_cap = 0;
  bool with_images = false;

  auto* gen_scenes = app.add_subcommand("gen-scenes", "generate context scenes");
  add_common(gen_scenes, args);

  auto* instantiate_cmd =
      app.add_subcommand("instantiate", "instantiate a standard into a dataset manifest");
  add_common(instantiate_cmd, args);
  instantiate_cmd->add_option("--standard", standard_path, "standard JSON (default: builtin)");
  instantiate_cmd->add_flag("--with-images", with_images, "also write sample PNGs");

  auto* train_cmd = app.add_subcommand("train", "train a classifier on an instantiated standard");
  add_common(train_cmd, args);
  train_cmd->add_option("--standard", standard_path, "standard JSON (default: builtin)");
  train_cmd->add_option("--mode", mode, "standard | doa | both")
      ->check(CLI::IsMember({"standard", "doa", "both"}));

  auto* attack_cmd = app.add_subcommand("attack", "attack a trained model over a split");
  add_common(attack_cmd, args);
  attack_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  attack_cmd->add_option("--standard", standard_path, "standard JSON (default: builtin)");
  attack_cmd->add_option("--attack", attack_id, "roa | rp4 | universal | pgd | dorpatch");
  attack_cmd->add_option("--split", split_name, "train | val | test");
  attack_cmd->add_option("--cap", sample_cap, "sample cap (0: whole split)");

  auto* optimize_cmd = app.add_subcommand("optimize", "optimize pictograms and colors");
  add_common(optimize_cmd, args);
  optimize_cmd->add_option("--k", k, "number of classes to optimize (default: all)");
  optimize_cmd->add_option("--init", init_mode, "static_gray | random")
      ->check(CLI::IsMember({"static_gray", "random"}));

  auto* evaluate_cmd = app.add_subcommand("evaluate", "benign + robust accuracy report");
  add_common(evaluate_cmd, args);
  evaluate_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  evaluate_cmd->add_option("--standard", standard_path, "standard JSON (default: builtin)");
  evaluate_cmd->add_option("--attack", attack_id, "attack id");
  evaluate_cmd->add_option("--split", split_name, "train | val | test");
  evaluate_cmd->add_option("--cap", sample_cap, "sample cap (0: whole split)");

  auto* report_cmd = app.add_subcommand("report", "regenerate plots from a run directory's CSVs");
  report_cmd->add_option("--dir", run_dir, "run directory")->required();

  auto* reproduce_cmd = app.add_subcommand("reproduce", "full experiment pipeline");
  add_common(reproduce_cmd, args);

  auto* check_cmd = app.add_subcommand("check", "validate a run directory's hash chain");
  check_cmd->add_option("--dir", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_scenes->parsed()) {
      const RunConfig cfg = resolve_config(args);
      const auto scenes = scenes_for(cfg);
      const fs::path out = fs::path(cfg.output_dir) / "scenes";
      fs::create_directories(out);
      json index = json::array();
      for (const auto& s : scenes) {
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%03d_%s.png", s.scene_id,
                      s.flipped ? "flip" : "base");
        write_png(s.background, (out / name).string());
        index.push_back({{"scene_id", s.scene_id},
                         {"type", to_string(s.scene_type)},
                         {"flipped", s.flipped},
                         {"image", name}});
      }
      write_json_file((out / "scenes.json").string(), index);
      std::cout << scenes.size() << " scenes -> " << out.string() << "\n";

    } else if (instantiate_cmd->parsed()) {
      const RunConfig cfg = resolve_config(args);
      const auto scenes = scenes_for(cfg);
      const TrafficSignStandard standard = standard_from(standard_path);
      SynthConfig sc = cfg.synth;
      sc.master_seed = derive_seed(cfg.master_seed, {0x44415441ULL, 1});
      const DatasetManifest manifest = instantiate(standard, scenes, sc);
      materialize(manifest, standard, scenes, cfg.output_dir, with_images);
      std::cout << "total=" << manifest.records.size() << " train=" << manifest.count(Split::train)
                << " val=" << manifest.count(Split::val) << " test=" << manifest.count(Split::test)
                << " -> " << cfg.output_dir << "/manifest.json\n";

    } else if (train_cmd->parsed()) {
      const RunConfig cfg = resolve_config(args);
      const auto scenes = scenes_for(cfg);
      const TrafficSignStandard standard = standard_from(standard_path);
      SynthConfig sc = cfg.synth;
      sc.master_seed = derive_seed(cfg.master_seed, {0x44415441ULL, 1});
      const DatasetManifest manifest = instantiate(standard, scenes, sc);
      const LabeledImages train = render_split_images(manifest, standard, scenes, Split::train);

      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(cfg.master_seed, {0x54524EULL});
      Classifier model(cfg.architecture, standard.n_classes(), sc.image_size,
                       derive_seed(tc.seed, {0x4D4F44ULL}));
      if (mode != "doa") train_standard(model, train, tc);
      if (mode != "standard") train_doa(model, train, tc, make_roa_inner_attack(cfg.inner_attack));

      fs::create_directories(cfg.output_dir);
      const std::string ckpt = (fs::path(cfg.output_dir) / "model.ckpt").string();
      save_checkpoint(model, ckpt, json{{"config_hash", cfg.hash()}, {"mode", mode}});
      const LabeledImages val = render_split_images(manifest, standard, scenes, Split::val);
      std::cout << "benign val accuracy " << evaluate_benign(model, val) << " -> " << ckpt << "\n";

    } else if (attack_cmd->parsed() || evaluate_cmd->parsed()) {
      const RunConfig cfg = resolve_config(args);
      const auto scenes = scenes_for(cfg);
      const TrafficSignStandard standard = standard_from(standard_path);
      SynthConfig sc = cfg.synth;
      sc.master_seed = derive_seed(cfg.master_seed, {0x44415441ULL, 1});
      const DatasetManifest manifest = instantiate(standard, scenes, sc);
      const LabeledImages split =
          render_split_images(manifest, standard, scenes, split_from_string(split_name));
      Classifier model = load_checkpoint(checkpoint_path);

      const int cap = sample_cap > 0 ? std::min(sample_cap, static_cast<int>(split.size()))
                                     : static_cast<int>(split.size());
      EvalReport rep;
      if (attack_id == "universal") {
        const UniversalPatch patch = universal_patch(
            model, split, cfg.eval_attack.universal_target, cfg.eval_attack, cfg.master_seed);
        rep = robust_accuracy(model, split, attack_id, cfg.eval_attack, cap, &patch,
                              cfg.master_seed);
      } else {
        rep = robust_accuracy(model, split, attack_id, cfg.eval_attack, cap, nullptr,
                              cfg.master_seed);
      }
      fs::create_directories(cfg.output_dir);
      const std::string out = (fs::path(cfg.output_dir) / "report.json").string();
      json j = rep.to_json();
      j["attack"] = attack_id;
      j["split"] = split_name;
      write_json_file(out, j);
      std::cout << "benign=" << rep.benign_accuracy << " robust=" << rep.robust_accuracy << " ("
                << attack_id << ", " << rep.sample_count << " samples) -> " << out << "\n";

    } else if (optimize_cmd->parsed()) {
      const RunConfig cfg = resolve_config(args);
      const auto scenes = scenes_for(cfg);
      const TrafficSignStandard original = builtin_standard();
      const PictogramPool pool = builtin_pool();
      const int kk = k < 0 ? original.n_classes() : k;

      OptimizeDeps deps = cfg.make_deps(scenes);
      PictogramSearchConfig search = cfg.search;
      search.seed = derive_seed(cfg.master_seed, {0x53524348ULL});
      ColorOptConfig color = cfg.color;
      color.seed = derive_seed(cfg.master_seed, {0x434F4C52ULL});
      if (init_mode == "static_gray") color.init = ColorOptConfig::Init::static_gray;
      if (init_mode == "random") color.init = ColorOptConfig::Init::random;

      const OptimizeStandardResult result =
          optimize_standard(original, pool, kk, search, color, deps);
      const fs::path out = cfg.output_dir;
      save_standard(result.standard, (out / "standard_optimized" / "standard.json").string());
      write_json_file((out / "greedy_trace.json").string(), greedy_trace_to_json(result.greedy));
      std::ofstream trace(out / "color_trace.jsonl");
      for (const auto& rt : result.colors.restarts) trace << trace_to_json(rt).dump() << "\n";
      if (kk > 0) {
        Classifier joint = result.colors.rebuild_model(original.n_classes());
        save_checkpoint(joint, (out / "model.ckpt").string(), json{{"config_hash", cfg.hash()}});
      }
      std::cout << "optimized k=" << kk << " -> " << out.string() << "\n";

    } else if (report_cmd->parsed()) {
      const fs::path dir = fs::path(run_dir) / "sweeps";
      bool any = false;
      if (fs::exists(dir / "sweep.csv")) {
        plot_sweep(SweepTable::load_csv((dir / "sweep.csv").string()),
                   (dir / "sweep.png").string());
        any = true;
      }
      if (fs::exists(dir / "ksweep.csv")) {
        plot_k_sweep(KSweepTable::load_csv((dir / "ksweep.csv").string()),
                     (dir / "ksweep.png").string());
        any = true;
      }
      if (!any) throw ConfigError("no CSV artifacts under " + dir.string());
      std::cout << "plots regenerated in " << dir.string() << "\n";

    } else if (reproduce_cmd->parsed()) {
      const RunConfig cfg = resolve_config(args);
      const json summary = reproduce(cfg);
      std::cout << summary.dump(2) << "\n";

    } else if (check_cmd->parsed()) {
      const auto problems = check_run_dir(run_dir);
      for (const auto& p : problems) std::cerr << "PROBLEM: " << p << "\n";
      if (!problems.empty()) return kExitStage;
      std::cout << "ok: " << run_dir << "\n";
    }
  } catch (const NotImplementedError& e) {
    std::cerr << "unimplemented: " << e.what() << "\n";
    return kExitUnimplemented;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
