#pragma once

// Boolean gate mining: input encoding, spike detection, event alignment,
// truth-table classification and tallies.

#include <algorithm>
#include <array>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "myco/engine.hpp"
#include "myco/probes.hpp"

namespace myco {

struct SpikeEvent {
  int electrode = 0;
  std::uint64_t time = 0;  ///< iteration of the peak
  double peak = 0.0;

  bool operator==(const SpikeEvent&) const = default;
};

struct SpikeDetection {
  double threshold = 2.0;          ///< theta, potential units
  std::uint64_t refractory = 300;  ///< rho, iterations
};

/// A spike is an interior sample p[i] with p[i-1] < p[i] >= p[i+1] and
/// p[i] >= threshold, accepted only if it lies at least `refractory`
/// iterations after the previously accepted spike.  On a plateau the first
/// sample is the peak.
inline std::vector<SpikeEvent> detect_spikes(const Trace& trace, const SpikeDetection& d = {}) {
  if (!(d.threshold > 0)) throw std::invalid_argument("spike threshold must be > 0");
  if (d.refractory < 1) throw std::invalid_argument("refractory window must be >= 1");
  if (trace.cadence < 1) throw std::invalid_argument("trace cadence must be >= 1");
  std::vector<SpikeEvent> out;
  const auto& p = trace.samples;
  std::optional<std::uint64_t> last;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (!(p[i] >= d.threshold && p[i - 1] < p[i] && p[i] >= p[i + 1])) continue;
    // Plateau: the maximum must actually come down before the next rise.
    std::size_t j = i + 1;
    while (j < p.size() && p[j] == p[i]) ++j;
    if (j == p.size() || p[j] > p[i]) continue;
    const std::uint64_t t = i * trace.cadence;
    if (last && t - *last < d.refractory) continue;
    out.push_back({trace.electrode_id, t, p[i]});
    last = t;
  }
  return out;
}

/// Input runs in mining order.
enum class InputRun { r01 = 0, r10 = 1, r11 = 2 };
inline constexpr std::array<InputRun, 3> kInputRuns{InputRun::r01, InputRun::r10, InputRun::r11};

inline std::string_view to_string(InputRun r) {
  switch (r) {
    case InputRun::r01: return "01";
    case InputRun::r10: return "10";
    case InputRun::r11: return "11";
  }
  return "?";
}

/// Bits (x, y) driven in a run.
inline std::pair<bool, bool> input_bits(InputRun r) {
  switch (r) {
    case InputRun::r01: return {false, true};
    case InputRun::r10: return {true, false};
    case InputRun::r11: return {true, true};
  }
  return {false, false};
}

struct ResponseTriple {
  int electrode = 0;
  std::uint64_t time = 0;  ///< earliest spike of the event
  bool f01 = false;
  bool f10 = false;
  bool f11 = false;

  bool operator==(const ResponseTriple&) const = default;
};

struct ClusterWindows {
  std::uint64_t simultaneity = 200;  ///< spikes with span below this are one event
  std::uint64_t separation = 1000;   ///< events closer than this are merged
};

/// Pools the spikes of one electrode from the (01), (10), (11) runs into
/// events.  Spikes are grouped greedily left to right into clusters whose
/// span is below `simultaneity`; consecutive clusters whose gap (first
/// spike of the later minus last spike of the earlier) is below
/// `separation` are merged.  Each event yields one triple.
inline std::vector<ResponseTriple> cluster_events(int electrode, const std::array<std::vector<SpikeEvent>, 3>& runs,
                                                  const ClusterWindows& w = {}) {
  if (w.simultaneity < 1) throw std::invalid_argument("simultaneity window must be > 0");
  struct Tagged {
    std::uint64_t time;
    int run;
  };
  std::vector<Tagged> pool;
  for (int r = 0; r < 3; ++r) {
    for (const auto& s : runs[r]) pool.push_back({s.time, r});
  }
  std::sort(pool.begin(), pool.end(), [](const Tagged& a, const Tagged& b) {
    return a.time != b.time ? a.time < b.time : a.run < b.run;
  });

  struct Cluster {
    std::uint64_t first, last;
    std::array<bool, 3> bits;
  };
  std::vector<Cluster> clusters;
  for (const auto& s : pool) {
    if (!clusters.empty() && s.time - clusters.back().first < w.simultaneity) {
      clusters.back().last = s.time;
      clusters.back().bits[s.run] = true;
      continue;
    }
    Cluster c{s.time, s.time, {false, false, false}};
    c.bits[s.run] = true;
    clusters.push_back(c);
  }

  std::vector<Cluster> merged;
  for (const auto& c : clusters) {
    if (!merged.empty() && c.first - merged.back().last < w.separation) {
      auto& m = merged.back();
      m.last = c.last;
      for (int r = 0; r < 3; ++r) m.bits[r] = m.bits[r] || c.bits[r];
      continue;
    }
    merged.push_back(c);
  }

  std::vector<ResponseTriple> out;
  out.reserve(merged.size());
  for (const auto& m : merged) out.push_back({electrode, m.first, m.bits[0], m.bits[1], m.bits[2]});
  return out;
}

enum class GateLabel { or_gate, select_y, xor_gate, select_x, notx_and_y, x_and_noty, and_gate };

inline constexpr std::array<GateLabel, 7> kGateLabels{GateLabel::or_gate,    GateLabel::select_y,
                                                      GateLabel::xor_gate,   GateLabel::select_x,
                                                      GateLabel::notx_and_y, GateLabel::x_and_noty,
                                                      GateLabel::and_gate};

/// CSV column names, in table order.
inline std::string_view column_name(GateLabel g) {
  switch (g) {
    case GateLabel::or_gate: return "or";
    case GateLabel::select_y: return "sel_y";
    case GateLabel::xor_gate: return "xor";
    case GateLabel::select_x: return "sel_x";
    case GateLabel::notx_and_y: return "notx_and_y";
    case GateLabel::x_and_noty: return "x_and_noty";
    case GateLabel::and_gate: return "and";
  }
  return "?";
}

inline std::string_view display_name(GateLabel g) {
  switch (g) {
    case GateLabel::or_gate: return "x+y";
    case GateLabel::select_y: return "Sy";
    case GateLabel::xor_gate: return "x^y";
    case GateLabel::select_x: return "Sx";
    case GateLabel::notx_and_y: return "!x.y";
    case GateLabel::x_and_noty: return "x.!y";
    case GateLabel::and_gate: return "x.y";
  }
  return "?";
}

/// Truth table lookup over (f01, f10, f11) with f00 = 0.
inline GateLabel classify(const ResponseTriple& t) {
  const int code = (t.f01 ? 4 : 0) | (t.f10 ? 2 : 0) | (t.f11 ? 1 : 0);
  switch (code) {
    case 0b111: return GateLabel::or_gate;
    case 0b101: return GateLabel::select_y;
    case 0b110: return GateLabel::xor_gate;
    case 0b011: return GateLabel::select_x;
    case 0b100: return GateLabel::notx_and_y;
    case 0b010: return GateLabel::x_and_noty;
    case 0b001: return GateLabel::and_gate;
    default: throw std::invalid_argument("all-false response triple has no gate");
  }
}

/// Evaluates a gate as a Boolean function of (x, y).
inline bool evaluate(GateLabel g, bool x, bool y) {
  switch (g) {
    case GateLabel::or_gate: return x || y;
    case GateLabel::select_y: return y;
    case GateLabel::xor_gate: return x != y;
    case GateLabel::select_x: return x;
    case GateLabel::notx_and_y: return !x && y;
    case GateLabel::x_and_noty: return x && !y;
    case GateLabel::and_gate: return x && y;
  }
  return false;
}

/// Stimuli for one input combination: Ex's disc when x, Ey's disc when y.
inline std::vector<Stimulus> encode_inputs(const Electrode& ex, const Electrode& ey, bool x, bool y,
                                           const ConductiveGrid& grid, const Stimulus& shape) {
  if (ex.id == ey.id || ex.center == ey.center) {
    throw std::invalid_argument("input electrodes must differ");
  }
  std::vector<Stimulus> out;
  for (const auto& [on, e] : {std::pair{x, &ex}, std::pair{y, &ey}}) {
    if (!on) continue;
    Stimulus s = shape;
    s.loci = disc_nodes(*e, grid);
    out.push_back(std::move(s));
  }
  return out;
}

using GateCounts = std::array<std::uint64_t, 7>;

struct GateTally {
  int ex = 0;
  int ey = 0;
  double c2 = 0.0;
  std::vector<int> electrodes;    ///< row labels
  std::vector<GateCounts> rows;   ///< one per electrode
  std::vector<bool> input_flags;  ///< true on the two input electrodes

  GateCounts totals() const {
    GateCounts t{};
    for (const auto& r : rows) {
      for (std::size_t g = 0; g < t.size(); ++g) t[g] += r[g];
    }
    return t;
  }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : totals()) n += c;
    return n;
  }
};

inline std::uint64_t row_total(const GateCounts& c) {
  std::uint64_t n = 0;
  for (auto x : c) n += x;
  return n;
}

inline void write_tally_csv(const GateTally& t, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "electrode";
  for (auto g : kGateLabels) out << ',' << column_name(g);
  out << ",total,input\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out << t.electrodes[i];
    for (auto c : t.rows[i]) out << ',' << c;
    out << ',' << row_total(t.rows[i]) << ',' << (t.input_flags[i] ? 1 : 0) << '\n';
  }
  const auto tot = t.totals();
  out << "Total";
  for (auto c : tot) out << ',' << c;
  out << ',' << row_total(tot) << ",\n";
  detail::finish(out, path);
}

struct MineOptions {
  std::uint64_t steps = 200000;
  Stimulus stimulus{};  ///< amplitude, onset and duration; loci are ignored
  SpikeDetection detection{};
  ClusterWindows windows{};
  bool count_input_electrodes = false;
  int workers = 1;  ///< stepper workers per run
  bool parallel_runs = false;
};

/// Everything one mining unit produced.
struct MineResult {
  GateTally tally;
  std::array<std::vector<Trace>, 3> traces;       ///< per run, per electrode
  std::array<std::vector<SpikeEvent>, 3> spikes;  ///< per run, all electrodes
  std::vector<ResponseTriple> triples;
};

namespace detail {

/// Runs one input combination and samples every electrode each iteration.
inline std::vector<Trace> record_electrodes(const ConductiveGrid& grid, const FhnParams& params,
                                            std::vector<Stimulus> stimuli, const std::vector<Electrode>& electrodes,
                                            std::uint64_t steps, int workers) {
  Simulator sim(grid, params, std::move(stimuli), workers);
  const auto& layout = sim.layout();
  std::vector<std::vector<std::size_t>> discs;
  std::vector<Trace> traces;
  for (const auto& e : electrodes) {
    std::vector<std::size_t> idx;
    for (const auto& n : disc_nodes(e, grid)) idx.push_back(layout.index(n.x, n.y));
    discs.push_back(std::move(idx));
    Trace t;
    t.electrode_id = e.id;
    t.cadence = 1;
    t.samples.reserve(steps + 1);
    traces.push_back(std::move(t));
  }
  auto sample = [&] {
    const auto u = sim.u();
    const auto v = sim.v();
    for (std::size_t k = 0; k < discs.size(); ++k) {
      double p = 0.0;
      for (auto i : discs[k]) p += u[i] - v[i];
      traces[k].samples.push_back(p);
    }
  };
  sample();
  for (std::uint64_t s = 0; s < steps; ++s) {
    sim.advance();
    sample();
  }
  return traces;
}

}  // namespace detail

/// Three runs from rest, inputs (01), (10), (11); spikes are detected and
/// aligned per electrode and every event is classified.
///
/// Unless `count_input_electrodes` is set, spikes on an input electrode
/// that peak inside its own stimulus window are the injected impulse and
/// are dropped.
inline MineResult mine(const ConductiveGrid& grid, const FhnParams& params, const std::vector<Electrode>& electrodes,
                       int ex_id, int ey_id, const MineOptions& opt) {
  auto find = [&](int id) -> const Electrode& {
    for (const auto& e : electrodes) {
      if (e.id == id) return e;
    }
    throw std::invalid_argument("no electrode with id " + std::to_string(id));
  };
  const Electrode& ex = find(ex_id);
  const Electrode& ey = find(ey_id);
  if (opt.steps < 1) throw std::invalid_argument("mining run length must be >= 1");

  MineResult res;
  auto& tally = res.tally;
  tally.ex = ex_id;
  tally.ey = ey_id;
  tally.c2 = params.c2;
  for (const auto& e : electrodes) {
    tally.electrodes.push_back(e.id);
    tally.input_flags.push_back(e.id == ex_id || e.id == ey_id);
  }
  tally.rows.assign(electrodes.size(), GateCounts{});
  if (grid.conductive_count() == 0) return res;

  auto run_one = [&](int r) {
    const auto [x, y] = input_bits(kInputRuns[r]);
    res.traces[r] = detail::record_electrodes(grid, params, encode_inputs(ex, ey, x, y, grid, opt.stimulus),
                                              electrodes, opt.steps, opt.workers);
  };
  if (opt.parallel_runs) {
    std::vector<std::jthread> pool;
    std::array<std::exception_ptr, 3> errors{};
    for (int r = 0; r < 3; ++r) {
      pool.emplace_back([&, r] {
        try {
          run_one(r);
        } catch (...) {
          errors[r] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (int r = 0; r < 3; ++r) run_one(r);
  }

  for (std::size_t k = 0; k < electrodes.size(); ++k) {
    std::array<std::vector<SpikeEvent>, 3> per_run;
    for (int r = 0; r < 3; ++r) {
      const auto [x, y] = input_bits(kInputRuns[r]);
      const bool stimulated = (x && electrodes[k].id == ex_id) || (y && electrodes[k].id == ey_id);
      for (const auto& s : detect_spikes(res.traces[r][k], opt.detection)) {
        if (stimulated && !opt.count_input_electrodes && opt.stimulus.active(s.time)) continue;
        per_run[r].push_back(s);
        res.spikes[r].push_back(s);
      }
    }
    for (const auto& t : cluster_events(electrodes[k].id, per_run, opt.windows)) {
      ++tally.rows[k][static_cast<std::size_t>(classify(t))];
      res.triples.push_back(t);
    }
  }
  return res;
}

inline void write_spikes_csv(const std::array<std::vector<SpikeEvent>, 3>& spikes,
                             const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "electrode,run,peak_step,peak_value\n";
  for (int r = 0; r < 3; ++r) {
    auto sorted = spikes[r];
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SpikeEvent& a, const SpikeEvent& b) { return a.electrode < b.electrode; });
    for (const auto& s : sorted) {
      out << s.electrode << ',' << to_string(kInputRuns[r]) << ',' << s.time << ','
          << detail::format_double(s.peak) << '\n';
    }
  }
  detail::finish(out, path);
}

/// Normalized gate frequencies; `empty` when no gate was found at all.
struct GateDistribution {
  GateCounts counts{};
  std::array<double, 7> ratio{};
  bool empty = true;

  double operator[](GateLabel g) const { return ratio[static_cast<std::size_t>(g)]; }
};

inline GateDistribution aggregate(const std::vector<GateTally>& tallies) {
  if (tallies.empty()) throw std::invalid_argument("aggregate needs at least one tally");
  GateDistribution d;
  for (const auto& t : tallies) {
    const auto c = t.totals();
    for (std::size_t g = 0; g < c.size(); ++g) d.counts[g] += c[g];
  }
  const auto n = row_total(d.counts);
  d.empty = n == 0;
  if (!d.empty) {
    for (std::size_t g = 0; g < d.counts.size(); ++g) {
      d.ratio[g] = static_cast<double>(d.counts[g]) / static_cast<double>(n);
    }
  }
  return d;
}

/// CSV `gate,ratio`; an empty distribution writes `empty` in the ratio
/// column instead of numbers.
inline void write_distribution_csv(const GateDistribution& d, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "gate,ratio\n";
  for (auto g : kGateLabels) {
    out << column_name(g) << ',';
    if (d.empty) {
      out << "empty";
    } else {
      out << detail::format_double(d[g]);
    }
    out << '\n';
  }
  detail::finish(out, path);
}

}  // namespace myco
