#include "signforge/runconfig.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/hash.hpp"

namespace signforge {

using nlohmann::json;

namespace {

json search_to_json(const PictogramSearchConfig& c) {
  return json{{"runs_per_candidate", c.runs_per_candidate},
              {"class_order",
               c.class_order == PictogramSearchConfig::Order::random ? "random" : "worst_first"},
              {"eval_attack", c.eval_attack.to_json()},
              {"seed", c.seed}};
}

PictogramSearchConfig search_from_json(const json& j) {
  PictogramSearchConfig c;
  c.runs_per_candidate = j.value("runs_per_candidate", c.runs_per_candidate);
  if (j.contains("class_order")) {
    const std::string s = j.at("class_order").get<std::string>();
    if (s == "random")
      c.class_order = PictogramSearchConfig::Order::random;
    else if (s == "worst_first")
      c.class_order = PictogramSearchConfig::Order::worst_first;
    else
      throw ConfigError("unknown class_order: " + s);
  }
  if (j.contains("eval_attack")) c.eval_attack = AttackConfig::from_json(j.at("eval_attack"));
  c.seed = j.value("seed", c.seed);
  return c;
}

json color_to_json(const ColorOptConfig& c) {
  return json{{"iterations", c.iterations},
              {"epoch_fraction", c.epoch_fraction},
              {"alpha", c.alpha},
              {"init", c.init == ColorOptConfig::Init::static_gray ? "static_gray" : "random"},
              {"restarts", c.restarts},
              {"seed", c.seed},
              {"adv_batch", c.adv_batch},
              {"eval_samples", c.eval_samples},
              {"eval_every", c.eval_every}};
}

ColorOptConfig color_from_json(const json& j) {
  ColorOptConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.epoch_fraction = j.value("epoch_fraction", c.epoch_fraction);
  c.alpha = j.value("alpha", c.alpha);
  if (j.contains("init")) {
    const std::string s = j.at("init").get<std::string>();
    if (s == "static_gray")
      c.init = ColorOptConfig::Init::static_gray;
    else if (s == "random")
      c.init = ColorOptConfig::Init::random;
    else
      throw ConfigError("unknown color init: " + s);
  }
  c.restarts = j.value("restarts", c.restarts);
  c.seed = j.value("seed", c.seed);
  c.adv_batch = j.value("adv_batch", c.adv_batch);
  c.eval_samples = j.value("eval_samples", c.eval_samples);
  c.eval_every = j.value("eval_every", c.eval_every);
  return c;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "master_seed",   "output_dir",  "paper_scale",     "scene",
      "synth",         "train",       "eval_attack",     "inner_attack",
      "search",        "color",       "architecture",    "transfer_architecture",
      "pretrain_epochs", "search_phase1_epochs", "search_phase2_epochs",
      "eval_cap",      "sweep_coverages", "sweep_attacks"};
  return keys;
}

}  // namespace

void RunConfig::validate() const {
  synth.validate();
  train.validate();
  eval_attack.validate();
  inner_attack.validate();
  search.validate();
  color.validate();
  if (scene.scenes_per_type < 1) throw ConfigError("scene.scenes_per_type must be >= 1");
  if (scene.image_size < 16) throw ConfigError("scene.image_size must be >= 16");
  if (scene.scenes_per_type != synth.scenes_per_type)
    throw ConfigError("scene.scenes_per_type must match synth.scenes_per_type");
  if (scene.image_size != synth.image_size)
    throw ConfigError("scene.image_size must match synth.image_size");
  if (eval_cap < 1) throw ConfigError("eval_cap must be >= 1");
  if (sweep_coverages.empty() || sweep_attacks.empty())
    throw ConfigError("sweep matrix must be non-empty");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
}

json RunConfig::to_json() const {
  return json{{"master_seed", master_seed},
              {"output_dir", output_dir},
              {"paper_scale", paper_scale},
              {"scene", {{"scenes_per_type", scene.scenes_per_type}, {"image_size", scene.image_size}}},
              {"synth", synth.to_json()},
              {"train", train.to_json()},
              {"eval_attack", eval_attack.to_json()},
              {"inner_attack", inner_attack.to_json()},
              {"search", search_to_json(search)},
              {"color", color_to_json(color)},
              {"architecture", to_string(architecture)},
              {"transfer_architecture", to_string(transfer_architecture)},
              {"pretrain_epochs", pretrain_epochs},
              {"search_phase1_epochs", search_phase1_epochs},
              {"search_phase2_epochs", search_phase2_epochs},
              {"eval_cap", eval_cap},
              {"sweep_coverages", sweep_coverages},
              {"sweep_attacks", sweep_attacks}};
}

RunConfig RunConfig::from_json(const json& j) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known_keys().count(key)) throw ConfigError("unknown config key: " + key);
  }
  RunConfig c = desk_config();
  c.master_seed = j.value("master_seed", c.master_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.paper_scale = j.value("paper_scale", c.paper_scale);
  if (j.contains("scene")) {
    c.scene.scenes_per_type = j.at("scene").value("scenes_per_type", c.scene.scenes_per_type);
    c.scene.image_size = j.at("scene").value("image_size", c.scene.image_size);
  }
  if (j.contains("synth")) {
    json merged = c.synth.to_json();
    merged.update(j.at("synth"));
    c.synth = SynthConfig::from_json(merged);
  }
  if (j.contains("train")) {
    json merged = c.train.to_json();
    merged.update(j.at("train"));
    c.train = TrainConfig::from_json(merged);
  }
  if (j.contains("eval_attack")) {
    json merged = c.eval_attack.to_json();
    merged.update(j.at("eval_attack"));
    c.eval_attack = AttackConfig::from_json(merged);
  }
  if (j.contains("inner_attack")) {
    json merged = c.inner_attack.to_json();
    merged.update(j.at("inner_attack"));
    c.inner_attack = AttackConfig::from_json(merged);
  }
  if (j.contains("search")) {
    json merged = search_to_json(c.search);
    merged.update(j.at("search"));
    c.search = search_from_json(merged);
  }
  if (j.contains("color")) {
    json merged = color_to_json(c.color);
    merged.update(j.at("color"));
    c.color = color_from_json(merged);
  }
  if (j.contains("architecture"))
    c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  if (j.contains("transfer_architecture"))
    c.transfer_architecture =
        architecture_from_string(j.at("transfer_architecture").get<std::string>());
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.search_phase1_epochs = j.value("search_phase1_epochs", c.search_phase1_epochs);
  c.search_phase2_epochs = j.value("search_phase2_epochs", c.search_phase2_epochs);
  c.eval_cap = j.value("eval_cap", c.eval_cap);
  if (j.contains("sweep_coverages"))
    c.sweep_coverages = j.at("sweep_coverages").get<std::vector<double>>();
  if (j.contains("sweep_attacks"))
    c.sweep_attacks = j.at("sweep_attacks").get<std::vector<std::string>>();
  if (c.paper_scale) c.apply_paper_scale();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path);
  out << to_json().dump(2) << "\n";
}

std::string RunConfig::hash() const { return config_hash(to_json()); }

void RunConfig::apply_paper_scale() {
  scene.scenes_per_type = 7;
  synth.scenes_per_type = 7;
  synth.augmented_per_base = 225;
  synth.test_scenes_per_type = 2;
  synth.val_fraction = 520.0 / 15750.0;
  train.phase1_epochs = 30;
  train.phase2_epochs = 100;
  train.batch_size = 64;
  eval_attack.stride = 2;
  eval_attack.opt_steps = 30;
  inner_attack.stride = 2;
  inner_attack.opt_steps = 30;
  search.runs_per_candidate = 5;
  color.iterations = 400;
  color.restarts = 10;
  pretrain_epochs = -1;
  search_phase1_epochs = -1;
  search_phase2_epochs = -1;
  eval_cap = 500;
}

OptimizeDeps RunConfig::make_deps(const std::vector<ContextScene>& scenes) const {
  OptimizeDeps deps;
  deps.scenes = &scenes;
  deps.synth_cfg = synth;
  deps.train_cfg = train;
  deps.eval_attack = eval_attack;
  deps.inner_attack_cfg = inner_attack;
  deps.arch = architecture;
  deps.pretrain_epochs = pretrain_epochs;
  deps.search_phase1_epochs = search_phase1_epochs;
  deps.search_phase2_epochs = search_phase2_epochs;
  return deps;
}

RunConfig desk_config() {
  RunConfig c;
  c.scene.scenes_per_type = 3;
  c.scene.image_size = 48;
  c.synth.scenes_per_type = 3;
  c.synth.augmented_per_base = 10;
  c.synth.test_scenes_per_type = 1;
  c.synth.val_fraction = 0.15;
  c.synth.image_size = 48;

  c.train.phase1_epochs = 20;
  c.train.phase2_epochs = 6;
  c.train.batch_size = 32;

  c.eval_attack.coverage = 0.05;
  c.eval_attack.m = 4;
  c.eval_attack.stride = 12;
  c.eval_attack.opt_steps = 10;

  c.inner_attack = c.eval_attack;
  c.inner_attack.m = 1;
  c.inner_attack.opt_steps = 5;

  c.search.runs_per_candidate = 1;
  c.search.eval_attack = c.eval_attack;
  c.search_phase1_epochs = 10;
  c.search_phase2_epochs = 2;

  c.color.iterations = 300;
  c.color.restarts = 3;
  c.color.adv_batch = 12;
  c.color.eval_samples = 100;

  c.eval_cap = 120;
  return c;
}

}  // namespace signforge
