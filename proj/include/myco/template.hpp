#pragma once

// Image -> conductive grid pipeline: threshold, dilate, neighbour counts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "myco/grid.hpp"
#include "myco/image.hpp"

namespace myco {

/// Green-on-dark mycelium pixels: r < 20, g > 40, b < 20 (strict).
struct ThresholdRule {
  int r_below = 20;
  int g_above = 40;
  int b_below = 20;

  bool operator()(const Rgb& px) const noexcept {
    return px.r < r_below && px.g > g_above && px.b < b_below;
  }
};

inline Mask binarize(const RgbImage& img, const ThresholdRule& rule = {}) {
  Mask m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = rule(img[i]) ? 1 : 0;
  return m;
}

/// One pass of binary dilation.  Output is set wherever the structuring
/// element (centre plus the chosen neighbourhood) touches a set input node.
inline Mask dilate(const Mask& in, Neighborhood element = Neighborhood::moore) {
  Mask out(in.width(), in.height());
  const int w = in.width();
  const int h = in.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!in(x, y)) continue;
      out(x, y) = 1;
      if (element == Neighborhood::moore) {
        for (const auto& d : kMoore) {
          if (in.contains(x + d[0], y + d[1])) out(x + d[0], y + d[1]) = 1;
        }
      } else {
        for (const auto& d : kVonNeumann) {
          if (in.contains(x + d[0], y + d[1])) out(x + d[0], y + d[1]) = 1;
        }
      }
    }
  }
  return out;
}

inline ConductiveGrid neighbor_counts(const Mask& mask,
                                      Neighborhood hood = Neighborhood::von_neumann) {
  ConductiveGrid g{mask, Field<std::uint8_t>(mask.width(), mask.height()), hood};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      int k = 0;
      if (hood == Neighborhood::von_neumann) {
        for (const auto& d : kVonNeumann) k += mask.get_or(x + d[0], y + d[1], 0) != 0;
      } else {
        for (const auto& d : kMoore) k += mask.get_or(x + d[0], y + d[1], 0) != 0;
      }
      g.k(x, y) = static_cast<std::uint8_t>(k);
    }
  }
  return g;
}

using KHistogram = std::map<int, std::size_t>;

/// Counts conductive nodes per neighbour count.  Only k values that occur
/// appear as keys.
inline KHistogram k_histogram(const ConductiveGrid& grid) {
  KHistogram hist;
  for (std::size_t i = 0; i < grid.mask.size(); ++i) {
    if (grid.mask[i]) ++hist[grid.k[i]];
  }
  return hist;
}

inline void write_k_histogram_csv(const KHistogram& hist, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "k,count\n";
  for (const auto& [k, n] : hist) out << k << ',' << n << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

struct TemplateOptions {
  ThresholdRule threshold{};
  int dilation_passes = 1;
  Neighborhood dilation_element = Neighborhood::moore;
  Neighborhood k_neighborhood = Neighborhood::von_neumann;
};

/// Full pipeline: threshold, dilate, count neighbours.
inline ConductiveGrid make_conductive_grid(const RgbImage& img, const TemplateOptions& opt = {}) {
  Mask m = binarize(img, opt.threshold);
  for (int i = 0; i < opt.dilation_passes; ++i) m = dilate(m, opt.dilation_element);
  return neighbor_counts(m, opt.k_neighborhood);
}

/// Block-average downsampling of a mask: an output node is conductive when
/// at least half of the `factor` x `factor` block is conductive.
inline Mask downsample(const Mask& in, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (factor == 1) return in;
  const int w = in.width() / factor;
  const int h = in.height() / factor;
  Mask out(w, h);
  const int need = (factor * factor + 1) / 2;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int n = 0;
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) n += in(x * factor + dx, y * factor + dy) != 0;
      }
      out(x, y) = n >= need ? 1 : 0;
    }
  }
  return out;
}

}  // namespace myco
