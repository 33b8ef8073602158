#include "signforge/standard.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace signforge {

RgbColor RgbColor::clipped() const {
  return {std::clamp(r, 0.0, 1.0), std::clamp(g, 0.0, 1.0), std::clamp(b, 0.0, 1.0)};
}

bool RgbColor::almost_equal(const RgbColor& o, double tol) const {
  return std::abs(r - o.r) <= tol && std::abs(g - o.g) <= tol && std::abs(b - o.b) <= tol;
}

void Pictogram::validate(int max_resolution) const {
  if (alpha_mask.c != 1) throw ConfigError("pictogram '" + id + "': mask must be single-channel");
  if (alpha_mask.h <= 0 || alpha_mask.w <= 0)
    throw ConfigError("pictogram '" + id + "': mask dimensions must be positive");
  if (max_resolution > 0 && (alpha_mask.h > max_resolution || alpha_mask.w > max_resolution))
    throw ConfigError("pictogram '" + id + "': mask larger than rendering resolution");
  for (Eigen::Index i = 0; i < alpha_mask.data.size(); ++i) {
    const double v = alpha_mask.data[i];
    if (v < 0.0 || v > 1.0)
      throw ConfigError("pictogram '" + id + "': mask value outside [0,1]");
  }
}

std::string to_string(SignShape s) {
  return s == SignShape::prohibitory_circle ? "prohibitory_circle" : "warning_triangle";
}

SignShape sign_shape_from_string(const std::string& s) {
  if (s == "prohibitory_circle") return SignShape::prohibitory_circle;
  if (s == "warning_triangle") return SignShape::warning_triangle;
  throw ConfigError("unknown sign shape: " + s);
}

const SignClass& TrafficSignStandard::sign_class(int class_id) const {
  for (const auto& c : classes)
    if (c.class_id == class_id) return c;
  throw ConfigError("unknown class id " + std::to_string(class_id));
}

void TrafficSignStandard::validate() const {
  if (classes.empty()) throw ConfigError("standard has no classes");
  std::set<int> ids;
  for (const auto& c : classes) {
    if (!ids.insert(c.class_id).second)
      throw ConfigError("duplicate class id " + std::to_string(c.class_id));
    const RgbColor cl = c.color.clipped();
    if (!cl.almost_equal(c.color, 0.0))
      throw ConfigError("class " + std::to_string(c.class_id) + ": color outside [0,1]");
    c.pictogram.validate();
  }
  for (int i = 1; i <= n_classes(); ++i)
    if (!ids.count(i))
      throw ConfigError("class ids not contiguous 1..n (missing " + std::to_string(i) + ")");
}

int PictogramPool::pool_size(int class_id) const {
  auto it = candidates.find(class_id);
  return it == candidates.end() ? 0 : static_cast<int>(it->second.size());
}

const Pictogram& PictogramPool::candidate(int class_id, int index_1based) const {
  auto it = candidates.find(class_id);
  if (it == candidates.end())
    throw ConfigError("pool has no class " + std::to_string(class_id));
  if (index_1based < 1 || index_1based > static_cast<int>(it->second.size()))
    throw ConfigError("candidate index " + std::to_string(index_1based) +
                      " out of range for class " + std::to_string(class_id));
  return it->second[index_1based - 1];
}

void PictogramPool::validate() const {
  for (const auto& [cid, list] : candidates) {
    if (list.empty()) throw ConfigError("empty candidate pool for class " + std::to_string(cid));
    for (const auto& p : list) p.validate();
  }
}

namespace {

json color_to_json(const RgbColor& c) {
  return json::array({c.r, c.g, c.b});
}

RgbColor color_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("color must be a 3-element array");
  RgbColor c{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!c.almost_equal(c.clipped(), 0.0)) throw ConfigError("color channel outside [0,1]");
  return c;
}

Pictogram pictogram_from_json(const json& j, const fs::path& base_dir) {
  Pictogram p;
  p.id = j.at("id").get<std::string>();
  p.display_name = j.value("display_name", p.id);
  p.source = j.value("source", std::string("file")) == "builtin" ? PictogramSource::builtin
                                                                 : PictogramSource::file;
  const fs::path mask_path = base_dir / j.at("mask_file").get<std::string>();
  if (!fs::exists(mask_path)) throw IoError("mask image not found: " + mask_path.string());
  p.alpha_mask = read_png(mask_path.string());
  p.validate();
  return p;
}

json pictogram_to_json(const Pictogram& p, const std::string& mask_file) {
  return json{{"id", p.id},
              {"mask_file", mask_file},
              {"display_name", p.display_name},
              {"source", p.source == PictogramSource::builtin ? "builtin" : "file"}};
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

TrafficSignStandard load_standard(const std::string& path) {
  const json j = parse_json_file(path);
  const fs::path base_dir = fs::path(path).parent_path();

  TrafficSignStandard s;
  try {
    s.name = j.at("name").get<std::string>();
    s.version = j.at("version").get<std::string>();
    for (const auto& jc : j.at("classes")) {
      SignClass c;
      c.class_id = jc.at("class_id").get<int>();
      c.shape = sign_shape_from_string(jc.at("shape").get<std::string>());
      c.pictogram = pictogram_from_json(jc.at("pictogram"), base_dir);
      c.color = color_from_json(jc.at("color"));
      s.classes.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + path + ": " + e.what());
  }
  s.validate();
  return s;
}

void save_standard(const TrafficSignStandard& standard, const std::string& path) {
  standard.validate();
  const fs::path base_dir = fs::path(path).parent_path();
  if (!base_dir.empty()) {
    std::error_code ec;
    fs::create_directories(base_dir, ec);
  }

  json jclasses = json::array();
  for (const auto& c : standard.classes) {
    const std::string mask_file = "mask_" + c.pictogram.id + ".png";
    write_png(c.pictogram.alpha_mask, (base_dir / mask_file).string());
    jclasses.push_back(json{{"class_id", c.class_id},
                            {"shape", to_string(c.shape)},
                            {"pictogram", pictogram_to_json(c.pictogram, mask_file)},
                            {"color", color_to_json(c.color)}});
  }
  const json j{{"name", standard.name}, {"version", standard.version}, {"classes", jclasses}};

  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  // default double serialization keeps >= 15 significant digits
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

PictogramPool load_pool(const std::string& path) {
  const json j = parse_json_file(path);
  const fs::path base_dir = fs::path(path).parent_path();
  PictogramPool pool;
  try {
    for (const auto& [key, entries] : j.at("classes").items()) {
      const int cid = std::stoi(key);
      for (const auto& je : entries)
        pool.candidates[cid].push_back(pictogram_from_json(je, base_dir));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed pool " + path + ": " + e.what());
  }
  pool.validate();
  return pool;
}

void save_pool(const PictogramPool& pool, const std::string& path) {
  pool.validate();
  const fs::path base_dir = fs::path(path).parent_path();
  if (!base_dir.empty()) {
    std::error_code ec;
    fs::create_directories(base_dir, ec);
  }
  json jclasses = json::object();
  for (const auto& [cid, list] : pool.candidates) {
    json arr = json::array();
    for (const auto& p : list) {
      const std::string mask_file = "pool_mask_" + p.id + ".png";
      write_png(p.alpha_mask, (base_dir / mask_file).string());
      arr.push_back(pictogram_to_json(p, mask_file));
    }
    jclasses[std::to_string(cid)] = std::move(arr);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pool: " + path);
  out << json{{"classes", jclasses}}.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

TrafficSignStandard set_color(const TrafficSignStandard& standard, int class_id,
                              const RgbColor& color) {
  TrafficSignStandard out = standard;
  for (auto& c : out.classes) {
    if (c.class_id == class_id) {
      c.color = color.clipped();
      return out;
    }
  }
  throw ConfigError("set_color: unknown class id " + std::to_string(class_id));
}

TrafficSignStandard set_pictogram(const TrafficSignStandard& standard, int class_id,
                                  int candidate_index, const PictogramPool& pool) {
  const Pictogram& cand = pool.candidate(class_id, candidate_index);
  TrafficSignStandard out = standard;
  for (auto& c : out.classes) {
    if (c.class_id == class_id) {
      c.pictogram = cand;
      return out;
    }
  }
  throw ConfigError("set_pictogram: unknown class id " + std::to_string(class_id));
}

}  // namespace signforge
