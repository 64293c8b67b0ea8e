#pragma once

// Experiment configuration: a JSON document with a schema version.  Every
// key is optional except the grid source; defaults carry the model
// constants.  Unknown keys are rejected so typos surface early.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "myco/engine.hpp"
#include "myco/gates.hpp"
#include "myco/probes.hpp"
#include "myco/template.hpp"

namespace myco {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ElectrodeSpec {
  int id = 0;
  int x = 0;
  int y = 0;
  double radius = 2.0;

  bool operator==(const ElectrodeSpec&) const = default;
};

struct ExperimentConfig {
  // Grid source: exactly one of image / mask.
  std::string image;
  std::string mask;
  int downsample = 1;
  TemplateOptions templ{};

  FhnParams params{};
  std::vector<double> c2{0.095};

  // Stimulus shape and loci for `run`.
  double amplitude = 1.0;
  std::uint64_t onset = 100;
  std::uint64_t duration = 1000;
  std::vector<int> stimulus_electrodes;
  std::vector<Node> stimulus_centers;  ///< discs of radius 2 around these nodes

  // Empty means the default 4 x 4 lattice.
  std::vector<ElectrodeSpec> electrodes;

  std::uint64_t steps = 50000;
  std::uint64_t trace_every = 1;
  std::uint64_t activity_every = 1;
  std::uint64_t coverage_every = 1;
  std::uint64_t snapshot_every = 100;
  bool snapshots = true;

  SpikeDetection detection{};
  ClusterWindows windows{};
  bool count_input_electrodes = false;
  std::vector<std::pair<int, int>> pairs{{3, 13}, {5, 15}, {7, 14}, {4, 13}, {13, 7}};
  std::uint64_t mine_steps = 200000;

  std::string output = "out";

  Stimulus stimulus_shape() const {
    Stimulus s;
    s.amplitude = amplitude;
    s.onset = onset;
    s.duration = duration;
    return s;
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  if (c.image.empty() == c.mask.empty()) throw ConfigError("exactly one of grid.image or grid.mask must be set");
  if (c.downsample < 1) throw ConfigError("grid.downsample must be >= 1");
  if (c.templ.dilation_passes < 0) throw ConfigError("template.dilation_passes must be >= 0");
  try {
    c.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (c.c2.empty()) throw ConfigError("model.c2 needs at least one value");
  for (double v : c.c2) {
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError("model.c2 values must be positive");
  }
  if (!(c.amplitude > 0) || !std::isfinite(c.amplitude)) throw ConfigError("stimulus.amplitude must be > 0");
  if (c.duration < 1) throw ConfigError("stimulus.duration must be >= 1");
  for (auto cad : {c.trace_every, c.activity_every, c.coverage_every, c.snapshot_every}) {
    if (cad < 1) throw ConfigError("probe cadences must be >= 1");
  }
  if (c.steps < 1) throw ConfigError("run.steps must be >= 1");
  if (c.steps < c.onset + c.duration) throw ConfigError("run.steps must cover the stimulus (>= onset + duration)");
  if (c.mine_steps < c.onset + c.duration) {
    throw ConfigError("mine.steps must cover the stimulus (>= onset + duration)");
  }
  if (!(c.detection.threshold > 0)) throw ConfigError("detection.threshold must be > 0");
  if (c.detection.refractory < 1) throw ConfigError("detection.refractory must be >= 1");
  if (c.windows.simultaneity < 1) throw ConfigError("detection.simultaneity must be >= 1");

  std::set<int> ids;
  for (const auto& e : c.electrodes) {
    if (!ids.insert(e.id).second) throw ConfigError("duplicate electrode id " + std::to_string(e.id));
    if (!(e.radius > 0)) throw ConfigError("electrode radius must be > 0");
  }
  auto known = [&](int id) { return c.electrodes.empty() ? (id >= 0 && id < 16) : ids.count(id) > 0; };
  for (int id : c.stimulus_electrodes) {
    if (!known(id)) throw ConfigError("stimulus refers to unknown electrode " + std::to_string(id));
  }
  for (const auto& [x, y] : c.pairs) {
    if (!known(x) || !known(y)) {
      throw ConfigError("input pair (" + std::to_string(x) + "," + std::to_string(y) + ") refers to an unknown electrode");
    }
    if (x == y) throw ConfigError("input pair uses the same electrode twice");
  }
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::read;
  using detail::reject_unknown;
  ExperimentConfig c;
  reject_unknown(j, {"schema_version", "grid", "template", "model", "stimulus", "electrodes", "run", "detection",
                     "mine", "output"},
                 "config");
  // A missing version means the current one, so a minimal config is just a grid source.
  int version = kConfigSchemaVersion;
  if (j.contains("schema_version")) {
    version = j.at("schema_version").is_number_integer() ? j.at("schema_version").get<int>() : -1;
  }
  if (version != kConfigSchemaVersion) {
    throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, {"image", "mask", "downsample"}, "grid");
    read(g, "image", c.image, "grid");
    read(g, "mask", c.mask, "grid");
    read(g, "downsample", c.downsample, "grid");
  }
  if (j.contains("template")) {
    const auto& t = j["template"];
    reject_unknown(t, {"r_below", "g_above", "b_below", "dilation_passes", "dilation_element", "k_neighborhood"},
                   "template");
    read(t, "r_below", c.templ.threshold.r_below, "template");
    read(t, "g_above", c.templ.threshold.g_above, "template");
    read(t, "b_below", c.templ.threshold.b_below, "template");
    read(t, "dilation_passes", c.templ.dilation_passes, "template");
    try {
      if (t.contains("dilation_element")) {
        c.templ.dilation_element = parse_neighborhood(t["dilation_element"].get<std::string>());
      }
      if (t.contains("k_neighborhood")) {
        c.templ.k_neighborhood = parse_neighborhood(t["k_neighborhood"].get<std::string>());
      }
    } catch (const std::exception& e) {
      throw ConfigError(std::string("template: ") + e.what());
    }
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, {"dt", "dx", "Du", "a", "b", "c1", "c2", "laplacian_rule"}, "model");
    read(m, "dt", c.params.dt, "model");
    read(m, "dx", c.params.dx, "model");
    read(m, "Du", c.params.Du, "model");
    read(m, "a", c.params.a, "model");
    read(m, "b", c.params.b, "model");
    read(m, "c1", c.params.c1, "model");
    if (m.contains("c2")) {
      if (m["c2"].is_array()) {
        read(m, "c2", c.c2, "model");
      } else {
        double v = 0;
        read(m, "c2", v, "model");
        c.c2 = {v};
      }
    }
    if (m.contains("laplacian_rule")) {
      try {
        c.params.rule = parse_laplacian_rule(m["laplacian_rule"].get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("model.laplacian_rule: ") + e.what());
      }
    }
  }
  c.params.c2 = c.c2.empty() ? c.params.c2 : c.c2.front();
  if (j.contains("stimulus")) {
    const auto& s = j["stimulus"];
    reject_unknown(s, {"amplitude", "onset", "duration", "electrodes", "centers"}, "stimulus");
    read(s, "amplitude", c.amplitude, "stimulus");
    read(s, "onset", c.onset, "stimulus");
    read(s, "duration", c.duration, "stimulus");
    read(s, "electrodes", c.stimulus_electrodes, "stimulus");
    if (s.contains("centers")) {
      std::vector<std::array<int, 2>> xy;
      read(s, "centers", xy, "stimulus");
      for (const auto& p : xy) c.stimulus_centers.push_back({p[0], p[1]});
    }
  }
  if (j.contains("electrodes")) {
    const auto& e = j["electrodes"];
    if (!e.is_null()) {
      if (!e.is_array()) throw ConfigError("electrodes: expected an array or null");
      for (const auto& item : e) {
        reject_unknown(item, {"id", "x", "y", "radius"}, "electrodes[]");
        ElectrodeSpec s;
        if (!item.contains("id") || !item.contains("x") || !item.contains("y")) {
          throw ConfigError("electrodes[]: id, x and y are required");
        }
        read(item, "id", s.id, "electrodes[]");
        read(item, "x", s.x, "electrodes[]");
        read(item, "y", s.y, "electrodes[]");
        read(item, "radius", s.radius, "electrodes[]");
        c.electrodes.push_back(s);
      }
    }
  }
  if (j.contains("run")) {
    const auto& r = j["run"];
    reject_unknown(r, {"steps", "trace_every", "activity_every", "coverage_every", "snapshot_every", "snapshots"},
                   "run");
    read(r, "steps", c.steps, "run");
    read(r, "trace_every", c.trace_every, "run");
    read(r, "activity_every", c.activity_every, "run");
    read(r, "coverage_every", c.coverage_every, "run");
    read(r, "snapshot_every", c.snapshot_every, "run");
    read(r, "snapshots", c.snapshots, "run");
  }
  if (j.contains("detection")) {
    const auto& d = j["detection"];
    reject_unknown(d, {"threshold", "refractory", "simultaneity", "separation", "count_input_electrodes"},
                   "detection");
    read(d, "threshold", c.detection.threshold, "detection");
    read(d, "refractory", c.detection.refractory, "detection");
    read(d, "simultaneity", c.windows.simultaneity, "detection");
    read(d, "separation", c.windows.separation, "detection");
    read(d, "count_input_electrodes", c.count_input_electrodes, "detection");
  }
  if (j.contains("mine")) {
    const auto& m = j["mine"];
    reject_unknown(m, {"pairs", "steps"}, "mine");
    if (m.contains("pairs")) {
      std::vector<std::array<int, 2>> pairs;
      read(m, "pairs", pairs, "mine");
      c.pairs.clear();
      for (const auto& p : pairs) c.pairs.emplace_back(p[0], p[1]);
    }
    read(m, "steps", c.mine_steps, "mine");
  }
  // The default pairs name ids of the default layout only.
  if (!c.electrodes.empty() && !(j.contains("mine") && j["mine"].contains("pairs"))) c.pairs.clear();
  read(j, "output", c.output, "config");
  validate(c);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Paths in the file are taken relative to the file's directory.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto c = parse_config(ss.str());
  const auto base = path.parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  rebase(c.image);
  rebase(c.mask);
  rebase(c.output);
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
  nlohmann::json grid = nlohmann::json::object();
  if (!c.image.empty()) grid["image"] = c.image;
  if (!c.mask.empty()) grid["mask"] = c.mask;
  grid["downsample"] = c.downsample;
  j["grid"] = grid;
  j["template"] = {{"r_below", c.templ.threshold.r_below},
                   {"g_above", c.templ.threshold.g_above},
                   {"b_below", c.templ.threshold.b_below},
                   {"dilation_passes", c.templ.dilation_passes},
                   {"dilation_element", to_string(c.templ.dilation_element)},
                   {"k_neighborhood", to_string(c.templ.k_neighborhood)}};
  j["model"] = {{"dt", c.params.dt}, {"dx", c.params.dx}, {"Du", c.params.Du},
                {"a", c.params.a},   {"b", c.params.b},   {"c1", c.params.c1},
                {"c2", c.c2},        {"laplacian_rule", to_string(c.params.rule)}};
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& n : c.stimulus_centers) centers.push_back({n.x, n.y});
  j["stimulus"] = {{"amplitude", c.amplitude},
                   {"onset", c.onset},
                   {"duration", c.duration},
                   {"electrodes", c.stimulus_electrodes},
                   {"centers", centers}};
  if (c.electrodes.empty()) {
    j["electrodes"] = nullptr;
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : c.electrodes) arr.push_back({{"id", e.id}, {"x", e.x}, {"y", e.y}, {"radius", e.radius}});
    j["electrodes"] = arr;
  }
  j["run"] = {{"steps", c.steps},
              {"trace_every", c.trace_every},
              {"activity_every", c.activity_every},
              {"coverage_every", c.coverage_every},
              {"snapshot_every", c.snapshot_every},
              {"snapshots", c.snapshots}};
  j["detection"] = {{"threshold", c.detection.threshold},
                    {"refractory", c.detection.refractory},
                    {"simultaneity", c.windows.simultaneity},
                    {"separation", c.windows.separation},
                    {"count_input_electrodes", c.count_input_electrodes}};
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [x, y] : c.pairs) pairs.push_back({x, y});
  j["mine"] = {{"pairs", pairs}, {"steps", c.mine_steps}};
  j["output"] = c.output;
  return j;
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Builds the conductive grid the configuration describes: the template
/// pipeline for an image, the stored mask otherwise, then optional
/// block downsampling.
inline ConductiveGrid load_grid(const ExperimentConfig& c) {
  Mask m;
  if (!c.image.empty()) {
    const auto img = load_image(c.image);
    m = make_conductive_grid(img, c.templ).mask;
  } else {
    m = load_mask_pgm(c.mask);
  }
  if (c.downsample > 1) m = downsample(m, c.downsample);
  return neighbor_counts(m, c.templ.k_neighborhood);
}

/// Electrodes for a grid: the configured list, or the default lattice.
inline std::vector<Electrode> resolve_electrodes(const ExperimentConfig& c, const ConductiveGrid& grid) {
  std::vector<Electrode> out;
  if (c.electrodes.empty()) {
    out = default_electrode_layout(grid);
  } else {
    for (const auto& e : c.electrodes) out.push_back(Electrode{e.id, {e.x, e.y}, e.radius});
  }
  try {
    validate_electrodes(out, grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

}  // namespace myco
