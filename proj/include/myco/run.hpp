#pragma once

// Drives a Simulator for a fixed number of steps with registered probes.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "myco/engine.hpp"
#include "myco/probes.hpp"

namespace myco {

/// Probe registrations.  An unset cadence means the probe is not attached;
/// a cadence of 0 is rejected.  Samples are taken at iteration 0 and then
/// every `cadence` iterations up to and including the last one reached.
struct ProbeSet {
  std::vector<Electrode> electrodes;
  std::optional<std::uint64_t> trace_every = 1;
  std::optional<std::uint64_t> activity_every = 1;
  std::optional<std::uint64_t> coverage_every = 1;
  std::optional<std::uint64_t> snapshot_every;  ///< typically 100
  Palette palette{};
};

using SnapshotSink = std::function<void(std::uint64_t iteration, const RgbImage&)>;

struct RunArtifacts {
  std::vector<Trace> traces;
  ActivitySeries activity;
  std::optional<CoverageMap> coverage;
  std::vector<std::pair<std::uint64_t, RgbImage>> snapshots;  ///< only without a sink
  FhnState final_state;
};

inline void validate_probes(const ProbeSet& p, const ConductiveGrid& grid) {
  for (const auto& c : {p.trace_every, p.activity_every, p.coverage_every, p.snapshot_every}) {
    if (c && *c == 0) throw std::invalid_argument("probe cadence must be >= 1");
  }
  validate_electrodes(p.electrodes, grid);
}

/// Iterates exactly `steps` times from `initial` (default: rest).
/// Snapshots go to `sink` when given, otherwise into the artifacts.
/// Propagates DivergenceError.
inline RunArtifacts run(const ConductiveGrid& grid, const FhnParams& params, std::vector<Stimulus> stimuli,
                        const ProbeSet& probes, std::uint64_t steps, int workers = 1,
                        const std::optional<FhnState>& initial = std::nullopt, const SnapshotSink& sink = {}) {
  if (steps < 1) throw std::invalid_argument("run needs steps >= 1");
  validate_probes(probes, grid);

  Simulator sim(grid, params, std::move(stimuli), workers);
  if (initial) sim.load(*initial);
  const auto& layout = sim.layout();
  const auto& slots = layout.slots();
  const auto& nodes = layout.nodes();

  RunArtifacts out;
  std::vector<std::vector<std::size_t>> discs;
  if (probes.trace_every) {
    for (const auto& e : probes.electrodes) {
      std::vector<std::size_t> idx;
      for (const auto& n : disc_nodes(e, grid)) idx.push_back(layout.index(n.x, n.y));
      discs.push_back(std::move(idx));
      out.traces.push_back(Trace{e.id, *probes.trace_every, {}});
    }
  }
  if (probes.activity_every) out.activity.cadence = *probes.activity_every;
  std::vector<std::uint8_t> covered;
  if (probes.coverage_every) covered.assign(slots.size(), 0);

  auto observe = [&](std::uint64_t t) {
    const auto u = sim.u();
    const auto v = sim.v();
    if (probes.trace_every && t % *probes.trace_every == 0) {
      for (std::size_t k = 0; k < discs.size(); ++k) {
        double p = 0.0;
        for (auto i : discs[k]) p += u[i] - v[i];
        out.traces[k].samples.push_back(p);
      }
    }
    const bool want_activity = probes.activity_every && t % *probes.activity_every == 0;
    const bool want_coverage = probes.coverage_every && t % *probes.coverage_every == 0;
    if (want_activity || want_coverage) {
      std::size_t active = 0;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const bool on = u[slots[i]] > kActivityThreshold;
        active += on;
        if (want_coverage && on) covered[i] = 1;
      }
      if (want_activity) out.activity.samples.push_back(active);
    }
    if (probes.snapshot_every && t % *probes.snapshot_every == 0) {
      RgbImage img(grid.width(), grid.height(), probes.palette.background);
      for (std::size_t i = 0; i < slots.size(); ++i) {
        img(nodes[i].x, nodes[i].y) =
            u[slots[i]] > kSnapshotThreshold ? probes.palette.excitation : probes.palette.substrate;
      }
      if (sink) {
        sink(t, img);
      } else {
        out.snapshots.emplace_back(t, std::move(img));
      }
    }
  };

  const std::uint64_t t0 = sim.iteration();
  observe(0);
  for (std::uint64_t s = 1; s <= steps; ++s) {
    sim.advance();
    observe(sim.iteration() - t0);
  }

  if (probes.coverage_every) {
    CoverageMap cov(grid.width(), grid.height());
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (covered[i]) cov(nodes[i].x, nodes[i].y) = 1;
    }
    out.coverage = std::move(cov);
  }
  out.final_state = sim.state();
  return out;
}

}  // namespace myco
