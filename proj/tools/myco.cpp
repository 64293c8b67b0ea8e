// myco: command-line front end.
//
//   myco template --config cfg.json
//   myco run      --config cfg.json [--workers N]
//   myco mine     --config cfg.json [--workers N]
//   myco report   --out DIR
//   myco colony   --image colony.png [--seed S]

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "myco/colony.hpp"
#include "myco/config.hpp"
#include "myco/engine.hpp"
#include "myco/gates.hpp"
#include "myco/plot.hpp"
#include "myco/probes.hpp"
#include "myco/run.hpp"
#include "myco/template.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace myco;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kConfigError = 2,
  kIoError = 3,
  kDiverged = 4,
  kEmptyMask = 5,
};

struct Globals {
  std::string config;
  std::string out;
  int workers = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool verbose = false;
  bool force = false;
};

std::mutex g_log_mutex;

template <typename... Args>
void log(const Globals& g, Args&&... args) {
  if (!g.verbose) return;
  std::lock_guard lock(g_log_mutex);
  (std::cerr << ... << args) << '\n';
}

std::string c2_dir(double c2) { return detail::format_double(c2); }

/// FNV-1a over the canonical config text; identifies a campaign in the manifest.
std::string config_digest(const ExperimentConfig& c) {
  auto j = to_json(c);
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// JSON-lines record of completed units, so an interrupted campaign can
/// resume where it stopped.
class Manifest {
 public:
  Manifest(fs::path path, std::string digest) : path_(std::move(path)), digest_(std::move(digest)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const auto j = json::parse(line);
        if (j.value("config", "") == digest_ && j.value("status", "") == "done") done_.insert(j.at("unit").get<std::string>());
      } catch (const json::exception&) {
        // A torn last line from an interrupted write is ignored.
      }
    }
  }

  bool done(const std::string& unit) const {
    std::lock_guard lock(mutex_);
    return done_.count(unit) > 0;
  }

  void record(const std::string& unit, json extra) {
    std::lock_guard lock(mutex_);
    extra["unit"] = unit;
    extra["config"] = digest_;
    std::ofstream out(path_, std::ios::app);
    out << extra.dump() << '\n';
    out.flush();
    if (!out) throw IoError("cannot append to " + path_.string());
    if (extra.value("status", "") == "done") done_.insert(unit);
  }

 private:
  fs::path path_;
  std::string digest_;
  mutable std::mutex mutex_;
  std::set<std::string> done_;
};

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

/// Runs `jobs` on up to `workers` threads; the first exception is rethrown
/// after every started job has finished.
void parallel_for(std::size_t jobs, int workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (true) {
      const auto i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs)));
  {
    std::vector<std::jthread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(body);
    body();
  }
  if (error) std::rethrow_exception(error);
}

ExperimentConfig load_checked(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  auto c = load_config(g.config);
  if (!g.out.empty()) c.output = g.out;
  return c;
}

void write_electrodes_csv(const std::vector<Electrode>& es, const ConductiveGrid& grid, const fs::path& path) {
  auto out = detail::open_for_write(path);
  out << "id,x,y,radius,nodes\n";
  for (const auto& e : es) {
    out << e.id << ',' << e.center.x << ',' << e.center.y << ',' << detail::format_double(e.radius) << ','
        << disc_nodes(e, grid).size() << '\n';
  }
  detail::finish(out, path);
}

int cmd_template(const Globals& g) {
  const auto c = load_checked(g);
  const auto grid = load_grid(c);
  const fs::path out = c.output;
  ensure_dir(out);
  save_mask_pgm(grid.mask, out / "mask.pgm");
  save_mask_png(grid.mask, out / "mask.png");
  const auto hist = k_histogram(grid);
  write_k_histogram_csv(hist, out / "k_histogram.csv");
  std::vector<std::string> labels;
  std::vector<double> counts;
  for (const auto& [k, n] : hist) {
    labels.push_back(std::to_string(k));
    counts.push_back(static_cast<double>(n));
  }
  save_png(bar_chart(labels, counts, "k histogram"), out / "k_histogram.png");
  std::cout << "grid " << grid.width() << "x" << grid.height() << ", " << grid.conductive_count()
            << " conductive nodes\n";
  if (grid.conductive_count() == 0) {
    std::cerr << "warning: the mask is empty; no node passed the threshold\n";
    return kEmptyMask;
  }
  write_electrodes_csv(resolve_electrodes(c, grid), grid, out / "electrodes.csv");
  return kOk;
}

std::vector<Stimulus> run_stimuli(const ExperimentConfig& c, const ConductiveGrid& grid,
                                  const std::vector<Electrode>& electrodes) {
  std::vector<Stimulus> out;
  for (int id : c.stimulus_electrodes) {
    const auto it = std::find_if(electrodes.begin(), electrodes.end(), [&](const Electrode& e) { return e.id == id; });
    if (it == electrodes.end()) throw ConfigError("stimulus refers to unknown electrode " + std::to_string(id));
    Stimulus s = c.stimulus_shape();
    s.loci = disc_nodes(*it, grid);
    out.push_back(std::move(s));
  }
  for (const auto& n : c.stimulus_centers) {
    Stimulus s = c.stimulus_shape();
    s.loci = disc_nodes(Electrode{-1, n, 2.0}, grid);
    if (s.loci.empty()) {
      throw ConfigError("stimulus centre (" + std::to_string(n.x) + "," + std::to_string(n.y) +
                        ") touches no conductive node");
    }
    out.push_back(std::move(s));
  }
  return out;
}

RgbImage activity_plot(const std::vector<std::pair<std::string, ActivitySeries>>& series) {
  std::vector<Series> s;
  for (const auto& [name, a] : series) {
    Series line{name, {}, {}};
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      line.x.push_back(static_cast<double>(i * a.cadence));
      line.y.push_back(static_cast<double>(a.samples[i]));
    }
    s.push_back(std::move(line));
  }
  return line_chart(s, "activity");
}

int cmd_run(const Globals& g) {
  const auto c = load_checked(g);
  const auto grid = load_grid(c);
  if (grid.conductive_count() == 0) {
    std::cerr << "warning: the mask is empty; nothing to simulate\n";
    return kEmptyMask;
  }
  const auto electrodes = resolve_electrodes(c, grid);
  const auto stimuli = run_stimuli(c, grid, electrodes);
  const fs::path out = c.output;
  ensure_dir(out);
  write_electrodes_csv(electrodes, grid, out / "electrodes.csv");
  Manifest manifest(out / "manifest.jsonl", config_digest(c));

  ProbeSet probes;
  probes.electrodes = electrodes;
  probes.trace_every = c.trace_every;
  probes.activity_every = c.activity_every;
  probes.coverage_every = c.coverage_every;
  if (c.snapshots) probes.snapshot_every = c.snapshot_every;

  const int unit_workers = std::max(1, g.workers / static_cast<int>(c.c2.size()));
  std::atomic<bool> diverged{false};
  parallel_for(c.c2.size(), g.workers, [&](std::size_t i) {
    const double c2 = c.c2[i];
    const std::string unit = "run/" + c2_dir(c2);
    if (!g.force && manifest.done(unit)) {
      log(g, unit, ": already done, skipped");
      return;
    }
    FhnParams p = c.params;
    p.c2 = c2;
    const fs::path dir = out / c2_dir(c2);
    ensure_dir(dir);
    if (c.snapshots) ensure_dir(dir / "snapshots");
    log(g, unit, ": ", c.steps, " steps on ", grid.conductive_count(), " nodes");
    const auto t0 = std::chrono::steady_clock::now();
    SnapshotSink sink = [&](std::uint64_t t, const RgbImage& img) {
      char name[32];
      std::snprintf(name, sizeof name, "t%09llu.png", static_cast<unsigned long long>(t));
      save_png(img, dir / "snapshots" / name);
    };
    try {
      const auto art = run(grid, p, stimuli, probes, c.steps, unit_workers, std::nullopt, sink);
      write_traces_csv(art.traces, dir / "traces.csv");
      write_activity_csv(art.activity, dir / "activity.csv");
      save_png(activity_plot({{c2_dir(c2), art.activity}}), dir / "activity.png");
      save_mask_pgm(*art.coverage, dir / "coverage.pgm");
      save_png(render_coverage(*art.coverage, grid, probes.palette), dir / "coverage.png");
      save_checkpoint(Checkpoint{p, art.final_state}, dir / "final.ckpt");
      const auto covered = count_true(*art.coverage);
      const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      manifest.record(unit, {{"status", "done"},
                             {"c2", c2},
                             {"covered", covered},
                             {"conductive", grid.conductive_count()},
                             {"seconds", secs}});
      std::cout << "c2=" << c2_dir(c2) << " covered " << covered << " of " << grid.conductive_count() << "\n";
    } catch (const DivergenceError& e) {
      diverged = true;
      manifest.record(unit, {{"status", "diverged"},
                             {"c2", c2},
                             {"iteration", e.iteration()},
                             {"node", {e.node().x, e.node().y}}});
      std::cerr << unit << ": " << e.what() << "\n";
    }
  });
  return diverged ? kDiverged : kOk;
}

std::string pair_tag(int ex, int ey) { return std::to_string(ex) + "_" + std::to_string(ey); }

void write_report(const fs::path& out);

int cmd_mine(const Globals& g) {
  const auto c = load_checked(g);
  if (c.pairs.empty()) throw ConfigError("mine needs at least one input pair");
  const auto grid = load_grid(c);
  if (grid.conductive_count() == 0) {
    std::cerr << "warning: the mask is empty; nothing to mine\n";
    return kEmptyMask;
  }
  const auto electrodes = resolve_electrodes(c, grid);
  const fs::path out = c.output;
  ensure_dir(out);
  write_electrodes_csv(electrodes, grid, out / "electrodes.csv");
  Manifest manifest(out / "manifest.jsonl", config_digest(c));

  struct Unit {
    double c2;
    int ex, ey;
  };
  std::vector<Unit> units;
  for (double c2 : c.c2) {
    for (const auto& [ex, ey] : c.pairs) units.push_back({c2, ex, ey});
  }

  MineOptions opt;
  opt.steps = c.mine_steps;
  opt.stimulus = c.stimulus_shape();
  opt.detection = c.detection;
  opt.windows = c.windows;
  opt.count_input_electrodes = c.count_input_electrodes;
  opt.workers = 1;

  std::atomic<bool> diverged{false};
  parallel_for(units.size(), g.workers, [&](std::size_t i) {
    const auto& u = units[i];
    const std::string unit = "mine/" + c2_dir(u.c2) + "/" + pair_tag(u.ex, u.ey);
    const fs::path dir = out / c2_dir(u.c2) / "mine";
    if (!g.force && manifest.done(unit) && fs::exists(dir / ("tally_" + pair_tag(u.ex, u.ey) + ".csv"))) {
      log(g, unit, ": already done, skipped");
      return;
    }
    ensure_dir(dir);
    FhnParams p = c.params;
    p.c2 = u.c2;
    log(g, unit, ": 3 x ", c.mine_steps, " steps");
    try {
      const auto res = mine(grid, p, electrodes, u.ex, u.ey, opt);
      write_tally_csv(res.tally, dir / ("tally_" + pair_tag(u.ex, u.ey) + ".csv"));
      write_spikes_csv(res.spikes, dir / ("spikes_" + pair_tag(u.ex, u.ey) + ".csv"));
      manifest.record(unit, {{"status", "done"}, {"c2", u.c2}, {"pair", {u.ex, u.ey}}, {"total", res.tally.total()}});
      std::cout << "c2=" << c2_dir(u.c2) << " pair (" << u.ex << "," << u.ey << ") gates " << res.tally.total()
                << "\n";
    } catch (const DivergenceError& e) {
      diverged = true;
      manifest.record(unit, {{"status", "diverged"},
                             {"c2", u.c2},
                             {"pair", {u.ex, u.ey}},
                             {"iteration", e.iteration()},
                             {"node", {e.node().x, e.node().y}}});
      std::cerr << unit << ": " << e.what() << "\n";
    }
  });
  write_report(out);
  return diverged ? kDiverged : kOk;
}

/// Reads a tally CSV written by `mine` back into its totals row.
GateCounts read_tally_totals(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  GateCounts totals{};
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("Total,", 0) != 0) continue;
    std::stringstream ss(line.substr(6));
    std::string cell;
    for (std::size_t g = 0; g < totals.size(); ++g) {
      if (!std::getline(ss, cell, ',')) throw IoError("malformed totals row in " + path.string());
      totals[g] = std::stoull(cell);
    }
    found = true;
  }
  if (!found) throw IoError("no totals row in " + path.string());
  return totals;
}

ActivitySeries read_activity(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  ActivitySeries a;
  std::string line;
  std::getline(in, line);
  std::vector<std::uint64_t> steps;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    steps.push_back(std::stoull(line.substr(0, comma)));
    a.samples.push_back(std::stoull(line.substr(comma + 1)));
  }
  a.cadence = steps.size() > 1 ? steps[1] - steps[0] : 1;
  return a;
}

void write_distribution(const GateDistribution& d, const fs::path& dir, const std::string& title) {
  write_distribution_csv(d, dir / "gates.csv");
  std::vector<std::string> labels;
  std::vector<double> values;
  for (auto gl : kGateLabels) {
    labels.emplace_back(display_name(gl));
    values.push_back(d[gl]);
  }
  save_png(bar_chart(labels, values, d.empty ? title + " (no gates)" : title), dir / "gates.png");
}

/// Summary, activity overlay and gate ratios over everything under `out`.
void write_report(const fs::path& out) {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<std::pair<std::string, ActivitySeries>> activity;
  std::vector<GateTally> all;
  auto summary = detail::open_for_write(out / "summary.csv");
  summary << "c2,covered,conductive,gates\n";
  for (const auto& dir : dirs) {
    const std::string name = dir.filename().string();
    std::string covered, conductive, gates;
    if (fs::exists(dir / "activity.csv")) activity.emplace_back(name, read_activity(dir / "activity.csv"));
    if (fs::exists(dir / "coverage.pgm")) {
      covered = std::to_string(count_true(load_mask_pgm(dir / "coverage.pgm")));
    }
    if (fs::exists(out / "mask.pgm")) conductive = std::to_string(count_true(load_mask_pgm(out / "mask.pgm")));
    std::vector<GateTally> here;
    if (fs::is_directory(dir / "mine")) {
      std::vector<fs::path> files;
      for (const auto& f : fs::directory_iterator(dir / "mine")) {
        if (f.path().filename().string().rfind("tally_", 0) == 0) files.push_back(f.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        GateTally t;
        t.rows.push_back(read_tally_totals(f));
        t.electrodes.push_back(-1);
        t.input_flags.push_back(false);
        here.push_back(t);
      }
    }
    if (!here.empty()) {
      const auto d = aggregate(here);
      write_distribution(d, dir, "gate ratios c2=" + name);
      gates = std::to_string(row_total(d.counts));
      all.insert(all.end(), here.begin(), here.end());
    }
    if (!covered.empty() || !gates.empty()) {
      summary << name << ',' << covered << ',' << conductive << ',' << gates << '\n';
    }
  }
  detail::finish(summary, out / "summary.csv");
  if (!activity.empty()) save_png(activity_plot(activity), out / "activity.png");
  if (!all.empty()) write_distribution(aggregate(all), out, "gate ratios");
}

int cmd_report(const Globals& g) {
  fs::path out = g.out;
  if (out.empty() && !g.config.empty()) out = load_checked(g).output;
  if (out.empty()) throw ConfigError("report needs --out or --config");
  if (!fs::is_directory(out)) throw IoError("no such output directory: " + out.string());
  write_report(out);
  std::cout << "report written to " << out.string() << "\n";
  return kOk;
}

int cmd_colony(const Globals& g, const std::string& path, int width, int height) {
  ColonyParams p;
  if (g.seed_set) p.seed = g.seed;
  save_image(synthesize_colony(width, height, p), path);
  std::cout << "wrote " << path << " (" << width << "x" << height << ", seed " << p.seed << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Excitation dynamics and Boolean gate mining on colony-derived grids"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed = app.add_option("--seed", g.seed, "Seed for the synthetic colony; the model itself is deterministic");
  app.add_flag("--verbose,-v", g.verbose, "Progress on stderr");
  app.add_flag("--force", g.force, "Redo units the manifest lists as done");

  auto* t = app.add_subcommand("template", "Write the conductive mask and k histogram");
  auto* r = app.add_subcommand("run", "Simulate each configured c2");
  auto* m = app.add_subcommand("mine", "Mine Boolean gates for each input pair and c2");
  auto* rep = app.add_subcommand("report", "Aggregate tallies and plot activity from an output directory");
  auto* col = app.add_subcommand("colony", "Render the synthetic colony image");
  std::string colony_path = "colony.png";
  int colony_w = 1000, colony_h = 960;
  col->add_option("--image", colony_path, "Output image (.png or .ppm)");
  col->add_option("--width", colony_w, "Width in pixels")->check(CLI::PositiveNumber);
  col->add_option("--height", colony_h, "Height in pixels")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  g.seed_set = seed->count() > 0;

  try {
    if (t->parsed()) return cmd_template(g);
    if (r->parsed()) return cmd_run(g);
    if (m->parsed()) return cmd_mine(g);
    if (rep->parsed()) return cmd_report(g);
    if (col->parsed()) return cmd_colony(g, colony_path, colony_w, colony_h);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ImageError& e) {
    std::cerr << "image error: " << e.what() << "\n";
    return kIoError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
