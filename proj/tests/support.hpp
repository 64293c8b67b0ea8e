#pragma once

// Small grid builders shared by the tests.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "myco/grid.hpp"
#include "myco/template.hpp"

namespace myco::test {

/// Grid from rows of '#' (conductive) and '.' (not).
inline ConductiveGrid grid_from(const std::vector<std::string>& rows) {
  const int h = static_cast<int>(rows.size());
  const int w = h ? static_cast<int>(rows[0].size()) : 0;
  Mask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m(x, y) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#';
  }
  return neighbor_counts(m);
}

inline ConductiveGrid full_grid(int w, int h) { return neighbor_counts(Mask(w, h, 1)); }

inline ConductiveGrid random_grid(int w, int h, double fill, unsigned seed) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution on(fill);
  Mask m(w, h);
  for (auto& b : m.data()) b = on(rng);
  return neighbor_counts(m);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("myco_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace myco::test
