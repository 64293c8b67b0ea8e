#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "myco/gates.hpp"
#include "support.hpp"

using namespace myco;
using myco::test::full_grid;
using myco::test::scratch_dir;

namespace {

Trace trace_of(std::vector<double> p, std::uint64_t cadence = 1) { return Trace{3, cadence, std::move(p)}; }

// Gaussian bump of height `h` centred at `c`.
void add_bump(std::vector<double>& p, double c, double h, double width = 20.0) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = (static_cast<double>(i) - c) / width;
    p[i] += h * std::exp(-d * d);
  }
}

// Peaks found by walking runs of equal samples; then threshold; then the
// refractory filter.  Written without reference to detect_spikes.
std::vector<std::uint64_t> brute_force_peaks(const std::vector<double>& p, double theta, std::uint64_t rho) {
  std::vector<std::uint64_t> peaks;
  std::size_t i = 0;
  while (i < p.size()) {
    std::size_t j = i;
    while (j + 1 < p.size() && p[j + 1] == p[i]) ++j;
    const bool rises_in = i > 0 && p[i - 1] < p[i];
    const bool falls_out = j + 1 < p.size() && p[j + 1] < p[i];
    if (rises_in && falls_out && p[i] >= theta) peaks.push_back(i);
    i = j + 1;
  }
  std::vector<std::uint64_t> kept;
  for (auto t : peaks) {
    if (kept.empty() || t - kept.back() >= rho) kept.push_back(t);
  }
  return kept;
}

std::vector<std::uint64_t> times(const std::vector<SpikeEvent>& s) {
  std::vector<std::uint64_t> out;
  for (const auto& e : s) out.push_back(e.time);
  return out;
}

SpikeEvent at(std::uint64_t t) { return SpikeEvent{0, t, 5.0}; }

GateTally tally_with(GateLabel g, std::uint64_t n) {
  GateTally t;
  t.electrodes = {0};
  t.input_flags = {false};
  t.rows = {GateCounts{}};
  t.rows[0][static_cast<std::size_t>(g)] = n;
  return t;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Thick segment from a to b with half-width r.
void paint_segment(Mask& m, double ax, double ay, double bx, double by, double r) {
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const double vx = bx - ax, vy = by - ay;
      double t = ((x - ax) * vx + (y - ay) * vy) / (vx * vx + vy * vy);
      t = std::clamp(t, 0.0, 1.0);
      const double dx = x - (ax + t * vx), dy = y - (ay + t * vy);
      if (dx * dx + dy * dy <= r * r) m(x, y) = 1;
    }
  }
}

}  // namespace

TEST(DetectSpikes, ZeroTraceHasNone) { EXPECT_TRUE(detect_spikes(trace_of(std::vector<double>(1000, 0.0))).empty()); }

TEST(DetectSpikes, SingleBump) {
  std::vector<double> p(1000, 0.0);
  add_bump(p, 400, 8.0);
  const auto s = detect_spikes(trace_of(p), {2.0, 300});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].time, 400u);
  EXPECT_DOUBLE_EQ(s[0].peak, 8.0);
  EXPECT_EQ(s[0].electrode, 3);
}

TEST(DetectSpikes, RefractorySuppressesSecondBump) {
  std::vector<double> p(2000, 0.0);
  add_bump(p, 500, 6.0, 10.0);
  add_bump(p, 650, 6.0, 10.0);
  const auto s = detect_spikes(trace_of(p), {2.0, 300});
  EXPECT_EQ(times(s), brute_force_peaks(p, 2.0, 300));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].time, 500u);
  EXPECT_EQ(detect_spikes(trace_of(p), {2.0, 100}).size(), 2u);
}

TEST(DetectSpikes, CadenceScalesTime) {
  std::vector<double> p(100, 0.0);
  add_bump(p, 40, 5.0, 3.0);
  const auto s = detect_spikes(trace_of(p, 10), {2.0, 1});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].time, 400u);
}

TEST(DetectSpikes, PlateausAndEdges) {
  // Flat top counts once at its first sample; a shelf that rises again does not.
  EXPECT_EQ(times(detect_spikes(trace_of({0, 3, 3, 3, 1}), {2.0, 1})), (std::vector<std::uint64_t>{1}));
  EXPECT_TRUE(detect_spikes(trace_of({0, 3, 3, 4, 4}), {2.0, 1}).empty());
  EXPECT_TRUE(detect_spikes(trace_of({5, 1, 0}), {2.0, 1}).empty());
  EXPECT_TRUE(detect_spikes(trace_of({0, 1, 5}), {2.0, 1}).empty());
  EXPECT_EQ(detect_spikes(trace_of({0, 2.0, 0}), {2.0, 1}).size(), 1u);
  EXPECT_TRUE(detect_spikes(trace_of({0, 1.99, 0}), {2.0, 1}).empty());
}

TEST(DetectSpikes, RejectsBadParameters) {
  EXPECT_THROW(detect_spikes(trace_of({0, 1, 0}), {0.0, 300}), std::invalid_argument);
  EXPECT_THROW(detect_spikes(trace_of({0, 1, 0}), {2.0, 0}), std::invalid_argument);
}

TEST(DetectSpikes, AgreesWithBruteForceScan) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> level(0, 6);
    std::vector<double> p(400);
    // Coarse levels give plenty of plateaus and ties.
    for (auto& x : p) x = level(rng);
    const double theta = 1 + trial % 5;
    const std::uint64_t rho = 1 + static_cast<std::uint64_t>(trial % 40);
    const auto got = detect_spikes(trace_of(p), {theta, rho});
    EXPECT_EQ(times(got), brute_force_peaks(p, theta, rho)) << "trial " << trial;
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_GE(got[i].time - got[i - 1].time, rho);
    for (const auto& s : got) EXPECT_GE(s.peak, theta);
  }
}

TEST(DetectSpikes, RaisingThresholdNeverAddsSpikes) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(3000, 0.0);
    std::uniform_real_distribution<double> pos(0, 3000), height(0.5, 10);
    for (int k = 0; k < 25; ++k) add_bump(p, pos(rng), height(rng), 8.0);
    std::size_t last = SIZE_MAX;
    for (double theta = 0.5; theta < 12; theta += 0.25) {
      const auto n = detect_spikes(trace_of(p), {theta, 300}).size();
      EXPECT_LE(n, last);
      last = n;
    }
  }
}

TEST(Cluster, WithinWindowGroups) {
  const auto t = cluster_events(4, {{{at(1000)}, {}, {at(1100)}}});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (ResponseTriple{4, 1000, true, false, true}));
}

TEST(Cluster, SingleSpikeInAndRun) {
  const auto t = cluster_events(0, {{{}, {}, {at(700)}}});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (ResponseTriple{0, 700, false, false, true}));
}

TEST(Cluster, SeparatedSpikesAreDistinctEvents) {
  const auto t = cluster_events(0, {{{at(1000)}, {at(5000)}, {}}});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (ResponseTriple{0, 1000, true, false, false}));
  EXPECT_EQ(t[1], (ResponseTriple{0, 5000, false, true, false}));
}

TEST(Cluster, CloseClustersMerge) {
  // 1000 and 1300 are not simultaneous, but only 300 apart: one event.
  const auto t = cluster_events(0, {{{at(1000)}, {at(1300)}, {}}});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(t[0].f01 && t[0].f10 && !t[0].f11);
  // Exactly at the windows: 200 is not simultaneous, 1000 apart is separate.
  EXPECT_EQ(cluster_events(0, {{{at(0)}, {at(200)}, {}}}).size(), 1u);
  EXPECT_EQ(cluster_events(0, {{{at(0)}, {at(1000)}, {}}}).size(), 2u);
  EXPECT_EQ(cluster_events(0, {{{at(0)}, {at(999)}, {}}}).size(), 1u);
}

TEST(Cluster, NoSpikesNoTriples) { EXPECT_TRUE(cluster_events(0, {}).empty()); }

TEST(Cluster, CountInvariantUnderWithinWindowRelabeling) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    // Events well apart; each has a few spikes inside a 150-iteration span.
    std::array<std::vector<SpikeEvent>, 3> runs, shuffled;
    std::uniform_int_distribution<int> nspk(1, 4), run(0, 2), off(0, 150);
    std::uint64_t base = 500;
    for (int e = 0; e < 6; ++e) {
      std::vector<std::uint64_t> ts;
      for (int k = nspk(rng); k > 0; --k) ts.push_back(base + static_cast<std::uint64_t>(off(rng)));
      std::vector<std::uint64_t> perm = ts;
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t k = 0; k < ts.size(); ++k) {
        const int r = run(rng);
        runs[r].push_back(at(ts[k]));
        shuffled[r].push_back(at(perm[k]));
      }
      base += 3000;
    }
    for (auto* rs : {&runs, &shuffled}) {
      for (auto& r : *rs) std::sort(r.begin(), r.end(), [](auto& a, auto& b) { return a.time < b.time; });
    }
    EXPECT_EQ(cluster_events(0, runs).size(), cluster_events(0, shuffled).size());
    EXPECT_EQ(cluster_events(0, runs).size(), 6u);
  }
}

TEST(Classify, TruthTableExamples) {
  EXPECT_EQ(classify({0, 0, true, true, true}), GateLabel::or_gate);
  EXPECT_EQ(classify({0, 0, true, true, false}), GateLabel::xor_gate);
  EXPECT_EQ(classify({0, 0, false, false, true}), GateLabel::and_gate);
}

TEST(Classify, ExhaustiveBijectionAndSemantics) {
  std::set<GateLabel> seen;
  for (int code = 0; code < 8; ++code) {
    const ResponseTriple t{0, 0, (code & 4) != 0, (code & 2) != 0, (code & 1) != 0};
    if (code == 0) {
      EXPECT_THROW(classify(t), std::invalid_argument);
      continue;
    }
    const auto g = classify(t);
    seen.insert(g);
    EXPECT_FALSE(evaluate(g, false, false));
    EXPECT_EQ(evaluate(g, false, true), t.f01);
    EXPECT_EQ(evaluate(g, true, false), t.f10);
    EXPECT_EQ(evaluate(g, true, true), t.f11);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Classify, NamesMatchColumns) {
  std::vector<std::string> cols;
  for (auto g : kGateLabels) cols.emplace_back(column_name(g));
  EXPECT_EQ(cols, (std::vector<std::string>{"or", "sel_y", "xor", "sel_x", "notx_and_y", "x_and_noty", "and"}));
}

TEST(Classify, SwappingInputsMirrorsLabels) {
  // Relabel runs (01) <-> (10) on synthetic spike trains.
  std::mt19937 rng(11);
  auto mirror = [](GateLabel g) {
    switch (g) {
      case GateLabel::select_x: return GateLabel::select_y;
      case GateLabel::select_y: return GateLabel::select_x;
      case GateLabel::notx_and_y: return GateLabel::x_and_noty;
      case GateLabel::x_and_noty: return GateLabel::notx_and_y;
      default: return g;
    }
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::array<std::vector<SpikeEvent>, 3> runs;
    std::bernoulli_distribution coin(0.5);
    for (std::uint64_t e = 0; e < 8; ++e) {
      for (int r = 0; r < 3; ++r) {
        if (coin(rng)) runs[r].push_back(at(1000 + e * 4000 + static_cast<std::uint64_t>(r * 30)));
      }
    }
    const auto a = cluster_events(0, runs);
    const auto b = cluster_events(0, {runs[1], runs[0], runs[2]});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(classify(b[i]), mirror(classify(a[i])));
  }
}

TEST(EncodeInputs, Examples) {
  const auto g = full_grid(20, 20);
  const Electrode ex{1, {4, 4}}, ey{2, {15, 15}};
  const Stimulus shape{{}, 1.0, 100, 1000};
  EXPECT_TRUE(encode_inputs(ex, ey, false, false, g, shape).empty());
  const auto one = encode_inputs(ex, ey, true, false, g, shape);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].loci, disc_nodes(ex, g));
  const auto both = encode_inputs(ex, ey, true, true, g, shape);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[1].loci, disc_nodes(ey, g));
  for (const auto& s : both) {
    EXPECT_EQ(s.amplitude, 1.0);
    EXPECT_EQ(s.onset, 100u);
    EXPECT_EQ(s.duration, 1000u);
  }
  EXPECT_THROW(encode_inputs(ex, ex, true, true, g, shape), std::invalid_argument);
}

TEST(Tally, TotalsAndCsv) {
  GateTally t;
  t.ex = 5;
  t.ey = 15;
  t.electrodes = {0, 5, 15};
  t.input_flags = {false, true, true};
  t.rows = {GateCounts{1, 0, 0, 2, 0, 0, 0}, GateCounts{0, 3, 0, 0, 0, 0, 1}, GateCounts{}};
  EXPECT_EQ(t.totals(), (GateCounts{1, 3, 0, 2, 0, 0, 1}));
  EXPECT_EQ(t.total(), 7u);
  const auto dir = scratch_dir("tally");
  write_tally_csv(t, dir / "t.csv");
  EXPECT_EQ(slurp(dir / "t.csv"),
            "electrode,or,sel_y,xor,sel_x,notx_and_y,x_and_noty,and,total,input\n"
            "0,1,0,0,2,0,0,0,3,0\n"
            "5,0,3,0,0,0,0,1,4,1\n"
            "15,0,0,0,0,0,0,0,0,1\n"
            "Total,1,3,0,2,0,0,1,7,\n");
}

TEST(Aggregate, Examples) {
  const auto one = aggregate({tally_with(GateLabel::or_gate, 10)});
  EXPECT_FALSE(one.empty);
  EXPECT_EQ(one[GateLabel::or_gate], 1.0);
  EXPECT_EQ(one[GateLabel::and_gate], 0.0);
  const auto two = aggregate({tally_with(GateLabel::or_gate, 1), tally_with(GateLabel::and_gate, 1)});
  EXPECT_EQ(two[GateLabel::or_gate], 0.5);
  EXPECT_EQ(two[GateLabel::and_gate], 0.5);
  EXPECT_THROW(aggregate({}), std::invalid_argument);
}

TEST(Aggregate, EmptyMarker) {
  const auto d = aggregate({tally_with(GateLabel::or_gate, 0)});
  EXPECT_TRUE(d.empty);
  for (auto g : kGateLabels) EXPECT_FALSE(std::isnan(d[g]));
  const auto dir = scratch_dir("dist");
  write_distribution_csv(d, dir / "d.csv");
  EXPECT_EQ(slurp(dir / "d.csv"),
            "gate,ratio\nor,empty\nsel_y,empty\nxor,empty\nsel_x,empty\nnotx_and_y,empty\nx_and_noty,empty\n"
            "and,empty\n");
  write_distribution_csv(aggregate({tally_with(GateLabel::xor_gate, 4), tally_with(GateLabel::and_gate, 1)}),
                         dir / "e.csv");
  EXPECT_EQ(slurp(dir / "e.csv"),
            "gate,ratio\nor,0\nsel_y,0\nxor,0.8\nsel_x,0\nnotx_and_y,0\nx_and_noty,0\nand,0.2\n");
}

TEST(Mine, EmptyGridGivesZeroTally) {
  const auto g = neighbor_counts(Mask(10, 10));
  const std::vector<Electrode> es{Electrode{0, {2, 2}}, Electrode{1, {7, 7}}};
  MineOptions opt;
  opt.steps = 2000;
  const auto r = mine(g, FhnParams{}, es, 0, 1, opt);
  EXPECT_EQ(r.tally.total(), 0u);
  EXPECT_EQ(r.tally.rows.size(), 2u);
}

TEST(Mine, RejectsUnknownOrIdenticalInputs) {
  const auto g = full_grid(10, 10);
  const std::vector<Electrode> es{Electrode{0, {2, 2}}, Electrode{1, {7, 7}}};
  MineOptions opt;
  opt.steps = 10;
  EXPECT_THROW(mine(g, FhnParams{}, es, 0, 9, opt), std::invalid_argument);
  EXPECT_THROW(mine(g, FhnParams{}, es, 1, 1, opt), std::invalid_argument);
}

TEST(Mine, YJunctionOutputAnswersEveryInputCombination) {
  // Mirror-symmetric Y: arms from the top corners meet mid-grid, one arm leaves downward.
  Mask m(121, 140);
  paint_segment(m, 15, 10, 60, 70, 12);
  paint_segment(m, 105, 10, 60, 70, 12);
  paint_segment(m, 60, 70, 60, 135, 12);
  const auto g = neighbor_counts(m);
  const std::vector<Electrode> es{Electrode{0, {20, 16}}, Electrode{1, {100, 16}}, Electrode{2, {60, 125}}};
  FhnParams p;
  p.c2 = 0.094;
  MineOptions opt;
  opt.steps = 150000;
  opt.stimulus = Stimulus{{}, 1.0, 100, 1000};
  const auto r = mine(g, p, es, 0, 1, opt);
  std::vector<ResponseTriple> out;
  for (const auto& t : r.triples) {
    if (t.electrode == 2) out.push_back(t);
  }
  ASSERT_FALSE(out.empty());
  // The output fires under each input pattern, which is OR up to timing.
  bool f01 = false, f10 = false, f11 = false;
  for (const auto& t : out) {
    f01 = f01 || t.f01;
    f10 = f10 || t.f10;
    f11 = f11 || t.f11;
  }
  EXPECT_TRUE(f01 && f10 && f11);
  // Two merging fronts drive the stem harder, so the joint response arrives
  // well ahead of either single one and is binned on its own.
  EXPECT_EQ(classify(out.front()), GateLabel::and_gate);
  EXPECT_GT(r.tally.total(), 1u);
}

TEST(Mine, DeterministicAndInputSpikesExcluded) {
  const auto g = full_grid(70, 24);
  const std::vector<Electrode> es{Electrode{0, {5, 12}}, Electrode{1, {64, 12}}, Electrode{2, {35, 12}}};
  FhnParams p;
  p.c2 = 0.094;
  MineOptions opt;
  opt.steps = 30000;
  opt.stimulus = Stimulus{{}, 1.0, 100, 1000};
  const auto a = mine(g, p, es, 0, 1, opt);
  opt.parallel_runs = true;
  const auto b = mine(g, p, es, 0, 1, opt);
  EXPECT_EQ(a.tally.rows, b.tally.rows);
  EXPECT_EQ(a.spikes, b.spikes);
  for (int r = 0; r < 3; ++r) {
    for (const auto& s : a.spikes[r]) {
      const auto [x, y] = input_bits(kInputRuns[r]);
      const bool driven = (x && s.electrode == 0) || (y && s.electrode == 1);
      if (driven) {
        EXPECT_FALSE(opt.stimulus.active(s.time));
      }
    }
  }
  opt.count_input_electrodes = true;
  const auto c = mine(g, p, es, 0, 1, opt);
  std::size_t na = 0, nc = 0;
  for (int r = 0; r < 3; ++r) {
    na += a.spikes[r].size();
    nc += c.spikes[r].size();
  }
  EXPECT_GT(nc, na);
}

TEST(Mine, SpikeDumpFormat) {
  const auto dir = scratch_dir("spikes");
  std::array<std::vector<SpikeEvent>, 3> s;
  s[0] = {SpikeEvent{4, 120, 5.5}, SpikeEvent{1, 300, 2.25}};
  s[2] = {SpikeEvent{0, 7, 3.0}};
  write_spikes_csv(s, dir / "s.csv");
  EXPECT_EQ(slurp(dir / "s.csv"), "electrode,run,peak_step,peak_value\n1,01,300,2.25\n4,01,120,5.5\n0,11,7,3\n");
}
