#pragma once

// Procedural stand-in for a confocal colony image.
//
// The colony is drawn in a 1000 x 960 reference frame and rasterized at
// any output size: a dense core, junction blobs joined by thick hyphal
// bundles (so the network has loops), a mesh of knots and medium hyphae
// filling the gaps, and thin hyphae at the rim.  Mycelium is green on a pale background, so
// the standard threshold rule recovers it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "myco/image.hpp"

namespace myco {

struct ColonyParams {
  std::uint64_t seed = 20200611;
  double radius = 430.0;            ///< colony disc radius (reference px)
  double core_radius = 60.0;
  // Junctions joined by thick bundles.
  double interior = 0.85;           ///< junctions lie within interior * radius
  int junctions = 14;
  double junction_spacing = 190.0;  ///< minimum distance between junctions
  double junction_radius_min = 45.0;
  double junction_radius_max = 60.0;
  int links_per_junction = 2;       ///< nearest neighbours each junction connects to
  double link_reach = 300.0;        ///< longest bundle
  double bundle_width_min = 86.0;   ///< full width of hyphal bundles
  double bundle_width_max = 96.0;
  // Small knots in the gaps, joined by medium hyphae.
  int knots = 80;
  double knot_spacing = 60.0;
  double knot_radius_min = 14.0;
  double knot_radius_max = 22.0;
  int links_per_knot = 3;
  double knot_reach = 110.0;
  double hypha_width_min = 19.0;
  double hypha_width_max = 19.5;
  int thin_hyphae = 160;
  double thin_width = 2.0;
};

namespace detail {

/// Uniform double in [0, 1) from a 64-bit engine; independent of the
/// standard library's distribution implementations.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

struct Capsule {
  double x0, y0, x1, y1;
  double r0, r1;  ///< half-widths at each end
};

struct Disc {
  double x, y, r;
};

/// Squared distance check against a tapered capsule.
inline bool inside(const Capsule& c, double x, double y) {
  const double dx = c.x1 - c.x0;
  const double dy = c.y1 - c.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((x - c.x0) * dx + (y - c.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double px = c.x0 + t * dx - x;
  const double py = c.y0 + t * dy - y;
  const double r = c.r0 + t * (c.r1 - c.r0);
  return px * px + py * py <= r * r;
}

}  // namespace detail

/// Renders the synthetic colony at `width` x `height` pixels.
inline RgbImage synthesize_colony(int width, int height, const ColonyParams& p = {}) {
  constexpr double kRefW = 1000.0;
  constexpr double kRefH = 960.0;
  std::mt19937_64 rng(p.seed);
  const double cx = kRefW / 2;
  const double cy = kRefH / 2;

  std::vector<detail::Disc> discs;
  std::vector<detail::Capsule> capsules;
  discs.push_back({cx, cy, p.core_radius});

  // Junctions: dart throwing inside the colony disc.
  std::vector<detail::Disc> junctions{{cx, cy, p.core_radius}};
  for (int attempt = 0; attempt < 20000 && static_cast<int>(junctions.size()) < p.junctions + 1; ++attempt) {
    const double ang = detail::uniform(rng, 0, 2 * M_PI);
    const double rad = p.interior * p.radius * std::sqrt(detail::unit(rng));
    const double x = cx + rad * std::cos(ang);
    const double y = cy + rad * std::sin(ang);
    bool ok = true;
    for (const auto& j : junctions) {
      if (std::hypot(j.x - x, j.y - y) < p.junction_spacing) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    junctions.push_back({x, y, detail::uniform(rng, p.junction_radius_min, p.junction_radius_max)});
  }
  for (std::size_t i = 1; i < junctions.size(); ++i) discs.push_back(junctions[i]);

  // Bundles: each junction links to its nearest neighbours within reach.
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < junctions.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t j = 0; j < junctions.size(); ++j) {
      if (j == i) continue;
      const double d = std::hypot(junctions[i].x - junctions[j].x, junctions[i].y - junctions[j].y);
      if (d <= p.link_reach) near.emplace_back(d, j);
    }
    std::sort(near.begin(), near.end());
    for (std::size_t n = 0; n < near.size() && static_cast<int>(n) < p.links_per_junction; ++n) {
      const auto a = std::min(i, near[n].second);
      const auto b = std::max(i, near[n].second);
      if (std::find(links.begin(), links.end(), std::make_pair(a, b)) == links.end()) links.emplace_back(a, b);
    }
  }
  std::sort(links.begin(), links.end());
  for (const auto& [a, b] : links) {
    const double w0 = detail::uniform(rng, p.bundle_width_min, p.bundle_width_max);
    const double w1 = detail::uniform(rng, p.bundle_width_min, p.bundle_width_max);
    capsules.push_back({junctions[a].x, junctions[a].y, junctions[b].x, junctions[b].y, w0 / 2, w1 / 2});
  }

  // Knots: dart throwing in the gaps between junctions and bundles.
  auto gap = [&](double x, double y) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& j : junctions) d = std::min(d, std::hypot(j.x - x, j.y - y) - j.r);
    for (const auto& c : capsules) {
      const double dx = c.x1 - c.x0, dy = c.y1 - c.y0;
      const double t = std::clamp(((x - c.x0) * dx + (y - c.y0) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
      d = std::min(d, std::hypot(c.x0 + t * dx - x, c.y0 + t * dy - y) - std::max(c.r0, c.r1));
    }
    return d;
  };
  std::vector<detail::Disc> knots;
  for (int attempt = 0; attempt < 20000 && static_cast<int>(knots.size()) < p.knots; ++attempt) {
    const double ang = detail::uniform(rng, 0, 2 * M_PI);
    const double rad = p.radius * std::sqrt(detail::unit(rng));
    const double x = cx + rad * std::cos(ang);
    const double y = cy + rad * std::sin(ang);
    bool ok = gap(x, y) >= p.knot_spacing / 2;
    for (const auto& k : knots) ok = ok && std::hypot(k.x - x, k.y - y) >= p.knot_spacing;
    if (!ok) continue;
    knots.push_back({x, y, detail::uniform(rng, p.knot_radius_min, p.knot_radius_max)});
  }
  discs.insert(discs.end(), knots.begin(), knots.end());

  // Medium hyphae: each knot links to its nearest knots or junctions within reach.
  std::vector<detail::Disc> anchors = knots;
  anchors.insert(anchors.end(), junctions.begin(), junctions.end());
  std::vector<std::pair<std::size_t, std::size_t>> hyphae;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t j = 0; j < anchors.size(); ++j) {
      if (j == i) continue;
      // Measured rim to rim, so a hypha to a large junction is not penalized.
      const double d = std::hypot(anchors[i].x - anchors[j].x, anchors[i].y - anchors[j].y) - anchors[j].r;
      if (d <= p.knot_reach) near.emplace_back(d, j);
    }
    std::sort(near.begin(), near.end());
    for (std::size_t n = 0; n < near.size() && static_cast<int>(n) < p.links_per_knot; ++n) {
      const auto a = std::min(i, near[n].second);
      const auto b = std::max(i, near[n].second);
      if (std::find(hyphae.begin(), hyphae.end(), std::make_pair(a, b)) == hyphae.end()) hyphae.emplace_back(a, b);
    }
  }
  std::sort(hyphae.begin(), hyphae.end());
  for (const auto& [a, b] : hyphae) {
    const double w = detail::uniform(rng, p.hypha_width_min, p.hypha_width_max);
    capsules.push_back({anchors[a].x, anchors[a].y, anchors[b].x, anchors[b].y, w / 2, w / 2});
  }

  // Thin hyphae: short wandering polylines growing outward from the rim.
  for (int h = 0; h < p.thin_hyphae; ++h) {
    double ang = detail::uniform(rng, 0, 2 * M_PI);
    double x = cx + p.radius * 0.92 * std::cos(ang);
    double y = cy + p.radius * 0.92 * std::sin(ang);
    const int segments = 6 + static_cast<int>(detail::unit(rng) * 8);
    for (int s = 0; s < segments; ++s) {
      ang += detail::uniform(rng, -0.35, 0.35);
      const double len = detail::uniform(rng, 10, 25);
      const double nx = x + len * std::cos(ang);
      const double ny = y + len * std::sin(ang);
      capsules.push_back({x, y, nx, ny, p.thin_width / 2, p.thin_width / 2});
      x = nx;
      y = ny;
    }
  }

  // Rasterize: sample each output pixel centre in reference coordinates.
  const double sx = kRefW / width;
  const double sy = kRefH / height;
  Field<std::uint8_t> cover(width, height, 0);
  auto paint = [&](double x0, double y0, double x1, double y1, auto&& test) {
    const int px0 = std::max(0, static_cast<int>(std::floor(x0 / sx)));
    const int px1 = std::min(width - 1, static_cast<int>(std::ceil(x1 / sx)));
    const int py0 = std::max(0, static_cast<int>(std::floor(y0 / sy)));
    const int py1 = std::min(height - 1, static_cast<int>(std::ceil(y1 / sy)));
    for (int py = py0; py <= py1; ++py) {
      for (int px = px0; px <= px1; ++px) {
        if (test((px + 0.5) * sx, (py + 0.5) * sy)) cover(px, py) = 1;
      }
    }
  };
  for (const auto& d : discs) {
    paint(d.x - d.r, d.y - d.r, d.x + d.r, d.y + d.r, [&](double x, double y) {
      return (x - d.x) * (x - d.x) + (y - d.y) * (y - d.y) <= d.r * d.r;
    });
  }
  for (const auto& c : capsules) {
    const double r = std::max(c.r0, c.r1) + std::max(sx, sy);
    paint(std::min(c.x0, c.x1) - r, std::min(c.y0, c.y1) - r, std::max(c.x0, c.x1) + r,
          std::max(c.y0, c.y1) + r, [&](double x, double y) { return detail::inside(c, x, y); });
  }

  // Colour: bright green mycelium with channel noise; pale background with
  // sparse dim-green speckle that the threshold rule rejects.
  RgbImage img(width, height);
  std::mt19937_64 tint(p.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto r = tint();
    const auto n0 = static_cast<std::uint8_t>(r & 0xff);
    const auto n1 = static_cast<std::uint8_t>((r >> 8) & 0xff);
    const auto n2 = static_cast<std::uint8_t>((r >> 16) & 0xff);
    if (cover[i]) {
      img[i] = Rgb{static_cast<std::uint8_t>(n0 % 16), static_cast<std::uint8_t>(70 + n1 % 150),
                   static_cast<std::uint8_t>(n2 % 16)};
    } else if (((r >> 24) & 0xff) < 3) {
      img[i] = Rgb{static_cast<std::uint8_t>(n0 % 16), static_cast<std::uint8_t>(20 + n1 % 20),
                   static_cast<std::uint8_t>(n2 % 16)};
    } else {
      img[i] = Rgb{static_cast<std::uint8_t>(225 + n0 % 30), static_cast<std::uint8_t>(225 + n1 % 30),
                   static_cast<std::uint8_t>(215 + n2 % 30)};
    }
  }
  return img;
}

}  // namespace myco
