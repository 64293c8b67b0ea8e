#pragma once

// Observers of a simulation: electrodes, activity, coverage, snapshots.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "myco/engine.hpp"
#include "myco/grid.hpp"
#include "myco/image.hpp"

namespace myco {

inline constexpr double kActivityThreshold = 0.1;
inline constexpr double kSnapshotThreshold = 0.04;

struct Electrode {
  int id = 0;
  Node center;
  double radius = 2.0;  ///< nodes y with |center - y| < radius belong to the disc
};

/// Conductive nodes of the electrode disc, row-major.
inline std::vector<Node> disc_nodes(const Electrode& e, const ConductiveGrid& grid) {
  std::vector<Node> out;
  const int r = static_cast<int>(std::ceil(e.radius));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (std::sqrt(static_cast<double>(dx * dx + dy * dy)) >= e.radius) continue;
      const Node n{e.center.x + dx, e.center.y + dy};
      if (grid.conductive(n)) out.push_back(n);
    }
  }
  return out;
}

inline void validate_electrodes(const std::vector<Electrode>& electrodes, const ConductiveGrid& grid) {
  std::set<int> ids;
  for (const auto& e : electrodes) {
    if (!ids.insert(e.id).second) {
      throw std::invalid_argument("duplicate electrode id " + std::to_string(e.id));
    }
    if (!(e.radius > 0)) throw std::invalid_argument("electrode radius must be > 0");
    if (disc_nodes(e, grid).empty()) {
      throw std::invalid_argument("electrode " + std::to_string(e.id) + " at (" +
                                  std::to_string(e.center.x) + "," + std::to_string(e.center.y) +
                                  ") touches no conductive node");
    }
  }
}

/// p = sum over the conductive disc of (u - v).
inline double electrode_potential(const FhnState& state, const ConductiveGrid& grid, const Electrode& e) {
  double p = 0.0;
  for (const auto& n : disc_nodes(e, grid)) p += state.u(n.x, n.y) - state.v(n.x, n.y);
  return p;
}

/// Number of conductive nodes with u > 0.1.
inline std::size_t activity(const FhnState& state, const ConductiveGrid& grid) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < grid.mask.size(); ++i) {
    n += grid.mask[i] && state.u[i] > kActivityThreshold;
  }
  return n;
}

/// Nodes that have ever exceeded u > 0.1.
using CoverageMap = Mask;

inline CoverageMap update_coverage(CoverageMap cov, const FhnState& state) {
  if (cov.size() == 0) cov = CoverageMap(state.u.width(), state.u.height());
  for (std::size_t i = 0; i < cov.size(); ++i) {
    if (state.u[i] > kActivityThreshold) cov[i] = 1;
  }
  return cov;
}

struct Palette {
  Rgb background{255, 255, 255};
  Rgb substrate{40, 40, 40};
  Rgb excitation{230, 30, 30};
  Rgb covered{220, 20, 20};
  Rgb uncovered{170, 170, 170};
};

inline RgbImage render_snapshot(const FhnState& state, const ConductiveGrid& grid, const Palette& pal = {},
                                double threshold = kSnapshotThreshold) {
  RgbImage img(grid.width(), grid.height(), pal.background);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!grid.mask[i]) continue;
    img[i] = state.u[i] > threshold ? pal.excitation : pal.substrate;
  }
  return img;
}

/// Covered nodes red, conductive-but-never-covered gray.
inline RgbImage render_coverage(const CoverageMap& cov, const ConductiveGrid& grid, const Palette& pal = {}) {
  RgbImage img(grid.width(), grid.height(), pal.background);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!grid.mask[i]) continue;
    img[i] = cov[i] ? pal.covered : pal.uncovered;
  }
  return img;
}

/// Distance (in 4-neighbour steps) from each conductive node to the nearest
/// non-conductive or out-of-grid node; 0 on non-conductive nodes.
inline Field<int> boundary_depth(const ConductiveGrid& grid) {
  Field<int> depth(grid.width(), grid.height(), 0);
  std::vector<Node> frontier;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.mask(x, y)) continue;
      bool edge = false;
      for (const auto& d : kVonNeumann) edge = edge || !grid.conductive(x + d[0], y + d[1]);
      if (edge) {
        depth(x, y) = 1;
        frontier.push_back({x, y});
      }
    }
  }
  for (int level = 1; !frontier.empty(); ++level) {
    std::vector<Node> next;
    for (const auto& n : frontier) {
      for (const auto& d : kVonNeumann) {
        const int x = n.x + d[0];
        const int y = n.y + d[1];
        if (grid.conductive(x, y) && depth(x, y) == 0) {
          depth(x, y) = level + 1;
          next.push_back({x, y});
        }
      }
    }
    frontier = std::move(next);
  }
  return depth;
}

/// Places `cols` x `rows` electrodes on a lattice spanning the bounding box
/// of the conductive nodes, ids in row-major order.  Each lattice point
/// moves to the nearest node at least `min_depth` steps away from any
/// non-conductive node, so the electrode sits inside a strand rather than
/// on its edge.  Where no node is that deep the requirement is relaxed
/// one step at a time.
inline std::vector<Electrode> default_electrode_layout(const ConductiveGrid& grid, int cols = 4, int rows = 4,
                                                       double radius = 2.0, int min_depth = 11) {
  int x0 = grid.width(), y0 = grid.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.mask(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw std::invalid_argument("cannot place electrodes on an empty grid");
  const auto depth = boundary_depth(grid);

  auto nearest = [&](double tx, double ty, int need) -> std::optional<Node> {
    std::optional<Node> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int y = 0; y < grid.height(); ++y) {
      for (int x = 0; x < grid.width(); ++x) {
        if (depth(x, y) < need) continue;
        const double d = (x - tx) * (x - tx) + (y - ty) * (y - ty);
        if (d < best_d) {
          best_d = d;
          best = Node{x, y};
        }
      }
    }
    return best;
  };

  std::vector<Electrode> out;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      const double tx = x0 + (x1 - x0) * (i + 0.5) / cols;
      const double ty = y0 + (y1 - y0) * (j + 0.5) / rows;
      std::optional<Node> n;
      for (int need = std::max(min_depth, 1); !n; --need) n = nearest(tx, ty, need);
      out.push_back(Electrode{j * cols + i, *n, radius});
    }
  }
  return out;
}

/// Potential samples of one electrode; sample i is iteration i * cadence.
struct Trace {
  int electrode_id = 0;
  std::uint64_t cadence = 1;
  std::vector<double> samples;
};

/// Activity samples; sample i is iteration i * cadence.
struct ActivitySeries {
  std::uint64_t cadence = 1;
  std::vector<std::size_t> samples;
};

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  const std::string full = os.str();
  for (int prec = 6; prec < 17; ++prec) {
    std::ostringstream t;
    t << std::setprecision(prec) << x;
    if (std::stod(t.str()) == x) return t.str();
  }
  return full;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

/// CSV `step,e<id>,...`; all traces must share one cadence and length.
inline void write_traces_csv(const std::vector<Trace>& traces, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "step";
  for (const auto& t : traces) out << ",e" << t.electrode_id;
  out << '\n';
  if (!traces.empty()) {
    const auto cadence = traces.front().cadence;
    const auto n = traces.front().samples.size();
    for (const auto& t : traces) {
      if (t.cadence != cadence || t.samples.size() != n) {
        throw std::invalid_argument("traces differ in cadence or length");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      out << i * cadence;
      for (const auto& t : traces) out << ',' << detail::format_double(t.samples[i]);
      out << '\n';
    }
  }
  detail::finish(out, path);
}

inline void write_activity_csv(const ActivitySeries& a, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << "step,activity\n";
  for (std::size_t i = 0; i < a.samples.size(); ++i) out << i * a.cadence << ',' << a.samples[i] << '\n';
  detail::finish(out, path);
}

}  // namespace myco
