#include "signforge/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/hash.hpp"
#include "signforge/plot.hpp"
#include "signforge/rng.hpp"
#include "signforge/synth.hpp"

namespace signforge {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

json EvalReport::to_json() const {
  return json{{"benign_accuracy", benign_accuracy},
              {"robust_accuracy", robust_accuracy},
              {"per_class_benign", per_class_benign},
              {"per_class_robust", per_class_robust},
              {"attack_hash", attack_hash},
              {"model_hash", model_hash},
              {"sample_count", sample_count},
              {"wall_time_s", wall_time_s}};
}

std::string model_config_hash(const Classifier& model) {
  return config_hash(json{{"architecture", to_string(model.architecture())},
                          {"n_classes", model.n_classes()},
                          {"image_size", model.image_size()}});
}

EvalReport robust_accuracy(Classifier& model, const LabeledImages& split,
                           const std::string& attack_id, const AttackConfig& cfg, int sample_cap,
                           const UniversalPatch* patch, std::uint64_t seed) {
  const auto& ids = registered_attacks();
  if (std::find(ids.begin(), ids.end(), attack_id) == ids.end())
    throw ConfigError("unknown attack: " + attack_id);
  if (attack_id == "dorpatch")
    throw NotImplementedError("attack 'dorpatch' is registered but not implemented");
  if (split.images.empty()) throw ConfigError("robust_accuracy: empty split");
  if (sample_cap > static_cast<int>(split.size()))
    throw ConfigError("robust_accuracy: sample_cap exceeds split size");
  if (attack_id == "universal" && patch == nullptr)
    throw ConfigError("universal attack requires a precomputed patch");

  const auto start = std::chrono::steady_clock::now();
  const size_t n = sample_cap > 0 ? static_cast<size_t>(sample_cap) : split.size();
  const int n_classes = model.n_classes();

  EvalReport report;
  report.per_class_benign.assign(static_cast<size_t>(n_classes), 0.0);
  report.per_class_robust.assign(static_cast<size_t>(n_classes), 0.0);
  std::vector<int> class_total(static_cast<size_t>(n_classes), 0);

  int benign_correct = 0, robust_correct = 0;
  for (size_t i = 0; i < n; ++i) {
    const Image& x = split.images[i];
    const int label = split.labels[i];
    const size_t c = static_cast<size_t>(label - 1);
    ++class_total[c];

    std::vector<const Image*> one = {&x};
    const bool benign_ok = model.predict(one)[0] == label;
    benign_correct += benign_ok;
    report.per_class_benign[c] += benign_ok;

    bool robust_ok;
    if (attack_id == "universal") {
      Rng rng(derive_seed(seed, {0x554E4956ULL, static_cast<std::uint64_t>(i)}));
      const int row = rng.uniform_int(std::max(1, x.h - patch->patch.h + 1));
      const int col = rng.uniform_int(std::max(1, x.w - patch->patch.w + 1));
      const Image adv = apply_patch_at(x, patch->patch, row, col);
      std::vector<const Image*> advp = {&adv};
      // benign miss counts as attack success, same convention as run_attack
      robust_ok = benign_ok && model.predict(advp)[0] == label;
    } else {
      robust_ok = !run_attack(attack_id, model, x, label, cfg).success;
    }
    robust_correct += robust_ok;
    report.per_class_robust[c] += robust_ok;
  }

  for (size_t c = 0; c < report.per_class_benign.size(); ++c) {
    if (class_total[c] == 0) continue;
    report.per_class_benign[c] /= class_total[c];
    report.per_class_robust[c] /= class_total[c];
  }
  report.benign_accuracy = static_cast<double>(benign_correct) / static_cast<double>(n);
  report.robust_accuracy = static_cast<double>(robust_correct) / static_cast<double>(n);
  report.attack_hash = config_hash(json{{"attack", attack_id}, {"config", cfg.to_json()}});
  report.model_hash = model_config_hash(model);
  report.sample_count = static_cast<int>(n);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ------------------------------------------------------------------ sweeps

void SweepTable::save_csv(const std::string& path) const {
  auto out = open_for_write(path);
  out << "attack,coverage,robust,success\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n", r.attack.c_str(), r.coverage, r.robust,
                  r.success);
    out << buf;
  }
}

SweepTable SweepTable::load_csv(const std::string& path) {
  auto in = open_for_read(path);
  SweepTable table;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw IoError("malformed sweep row in " + path);
    table.rows.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
  }
  return table;
}

SweepTable attack_sweep(Classifier& model, const LabeledImages& split,
                        const std::vector<std::string>& attacks,
                        const std::vector<double>& coverages, const AttackConfig& base_cfg,
                        int sample_cap, std::uint64_t seed) {
  if (attacks.empty() || coverages.empty()) throw ConfigError("attack_sweep: empty matrix");
  if (!std::is_sorted(coverages.begin(), coverages.end()))
    throw ConfigError("attack_sweep: coverages must be sorted ascending");

  SweepTable table;
  for (size_t ai = 0; ai < attacks.size(); ++ai) {
    for (size_t ci = 0; ci < coverages.size(); ++ci) {
      AttackConfig cfg = base_cfg;
      cfg.coverage = coverages[ci];
      const std::uint64_t cell_seed =
          derive_seed(seed, {static_cast<std::uint64_t>(ai), static_cast<std::uint64_t>(ci)});
      EvalReport rep;
      if (attacks[ai] == "universal") {
        const UniversalPatch patch =
            universal_patch(model, split, cfg.universal_target, cfg, cell_seed);
        rep = robust_accuracy(model, split, "universal", cfg, sample_cap, &patch, cell_seed);
      } else {
        rep = robust_accuracy(model, split, attacks[ai], cfg, sample_cap, nullptr, cell_seed);
      }
      table.rows.push_back(
          {attacks[ai], coverages[ci], rep.robust_accuracy, 1.0 - rep.robust_accuracy});
    }
  }
  return table;
}

void plot_sweep(const SweepTable& table, const std::string& png_path) {
  std::vector<PlotSeries> series;
  for (const auto& r : table.rows) {
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const PlotSeries& s) { return s.name == r.attack; });
    if (it == series.end()) {
      series.push_back({r.attack, {}, {}});
      it = series.end() - 1;
    }
    it->x.push_back(r.coverage);
    it->y.push_back(r.robust);
  }
  render_line_plot(series, "ROBUST ACCURACY VS COVERAGE", "COVERAGE", "ACC", png_path);
}

// -------------------------------------------------- optimized-class sweep

void KSweepTable::validate_complete(int n) const {
  for (int k = 0; k <= n; ++k) {
    for (const std::string init : {"static_gray", "random"}) {
      const bool found = std::any_of(rows.begin(), rows.end(), [&](const KSweepRow& r) {
        return r.k == k && r.init == init;
      });
      if (!found)
        throw ConfigError("k-sweep missing cell: k=" + std::to_string(k) + " init=" + init);
    }
  }
}

void KSweepTable::save_csv(const std::string& path) const {
  auto out = open_for_write(path);
  out << "k,init,benign,robust\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%s,%.6f,%.6f\n", r.k, r.init.c_str(), r.benign, r.robust);
    out << buf;
  }
}

KSweepTable KSweepTable::load_csv(const std::string& path) {
  auto in = open_for_read(path);
  KSweepTable table;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw IoError("malformed k-sweep row in " + path);
    table.rows.push_back({std::stoi(f[0]), f[1], std::stod(f[2]), std::stod(f[3])});
  }
  return table;
}

void plot_k_sweep(const KSweepTable& table, const std::string& png_path) {
  std::vector<PlotSeries> series;
  auto push = [&](const std::string& name, int k, double v) {
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const PlotSeries& s) { return s.name == name; });
    if (it == series.end()) {
      series.push_back({name, {}, {}});
      it = series.end() - 1;
    }
    it->x.push_back(k);
    it->y.push_back(v);
  };
  for (const auto& r : table.rows) {
    push("ROBUST " + r.init, r.k, r.robust);
    push("BENIGN " + r.init, r.k, r.benign);
  }
  for (auto& s : series) {  // keep each series sorted by k
    std::vector<size_t> idx(s.x.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return s.x[a] < s.x[b]; });
    PlotSeries sorted{s.name, {}, {}};
    for (size_t i : idx) {
      sorted.x.push_back(s.x[i]);
      sorted.y.push_back(s.y[i]);
    }
    s = std::move(sorted);
  }
  render_line_plot(series, "ACCURACY VS OPTIMIZED CLASSES", "K", "ACC", png_path);
}

// ------------------------------------------------------------------ transfer

std::vector<TransferRow> transfer_eval(const TrafficSignStandard& original,
                                       const TrafficSignStandard& optimized,
                                       const std::vector<Architecture>& architectures,
                                       const OptimizeDeps& deps, int sample_cap,
                                       std::uint64_t seed) {
  if (deps.scenes == nullptr) throw ConfigError("transfer_eval: missing scenes");
  std::vector<TransferRow> rows;
  for (size_t ai = 0; ai < architectures.size(); ++ai) {
    const std::uint64_t run_seed = derive_seed(seed, {0x5452414EULL, static_cast<std::uint64_t>(ai)});
    for (const auto* variant : {&original, &optimized}) {
      const TrafficSignStandard& standard = *variant;
      SynthConfig sc = deps.synth_cfg;
      sc.master_seed = derive_seed(run_seed, {0x44415441ULL});
      const DatasetManifest manifest = instantiate(standard, *deps.scenes, sc);

      LabeledImages train, val;
      for (int idx : manifest.indices(Split::train)) {
        const SampleRecord& rec = manifest.records[static_cast<size_t>(idx)];
        train.images.push_back(render_sample(rec, standard, *deps.scenes));
        train.labels.push_back(rec.label);
      }
      for (int idx : manifest.indices(Split::val)) {
        const SampleRecord& rec = manifest.records[static_cast<size_t>(idx)];
        val.images.push_back(render_sample(rec, standard, *deps.scenes));
        val.labels.push_back(rec.label);
      }

      TrainConfig tc = deps.train_cfg;
      tc.seed = run_seed;
      if (deps.pretrain_epochs >= 0) tc.phase1_epochs = deps.pretrain_epochs;
      Classifier model(architectures[ai], standard.n_classes(), sc.image_size,
                       derive_seed(run_seed, {0x4D4F44ULL}));
      if (tc.phase1_epochs > 0) train_standard(model, train, tc);
      if (tc.phase2_epochs > 0)
        train_doa(model, train, tc, make_roa_inner_attack(deps.inner_attack_cfg));

      const int cap = std::min(sample_cap, static_cast<int>(val.size()));
      const EvalReport rep =
          robust_accuracy(model, val, "rp4", deps.eval_attack, cap, nullptr, run_seed);
      rows.push_back({to_string(architectures[ai]), variant == &original ? "original" : "optimized",
                      rep.benign_accuracy, rep.robust_accuracy});
    }
  }
  return rows;
}

void save_transfer_csv(const std::vector<TransferRow>& rows, const std::string& path) {
  auto out = open_for_write(path);
  out << "architecture,standard,benign,robust\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f\n", r.architecture.c_str(),
                  r.standard.c_str(), r.benign, r.robust);
    out << buf;
  }
}

}  // namespace signforge
