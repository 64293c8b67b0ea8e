#pragma once

// Minimal raster charts (bar, line) with a built-in 5x7 font.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "myco/image.hpp"

namespace myco {

namespace detail {

struct Glyph {
  char c;
  std::array<std::uint8_t, 7> rows;  ///< bit 4 is the leftmost column
};

inline constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}}, {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'^', {0x04, 0x0A, 0x11, 0x00, 0x00, 0x00, 0x00}}, {'!', {0x04, 0x04, 0x04, 0x04, 0x00, 0x00, 0x04}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}}, {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
};

inline const Glyph* find_glyph(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& g : kFont) {
    if (g.c == c) return &g;
  }
  return nullptr;
}

inline void fill_rect(RgbImage& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width());
  y1 = std::min(y1, img.height());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) img(x, y) = c;
  }
}

inline void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (img.contains(x0, y0)) img(x0, y0) = c;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

inline constexpr int kGlyphW = 6;  // 5 columns plus spacing
inline constexpr int kGlyphH = 7;

inline int text_width(std::string_view s, int scale) { return static_cast<int>(s.size()) * kGlyphW * scale; }

inline void draw_text(RgbImage& img, int x, int y, std::string_view s, Rgb c, int scale = 1) {
  for (char ch : s) {
    if (const auto* g = find_glyph(ch)) {
      for (int r = 0; r < kGlyphH; ++r) {
        for (int col = 0; col < 5; ++col) {
          if (g->rows[r] & (0x10 >> col)) {
            fill_rect(img, x + col * scale, y + r * scale, x + (col + 1) * scale, y + (r + 1) * scale, c);
          }
        }
      }
    }
    x += kGlyphW * scale;
  }
}

inline std::string tick_label(double v) {
  char buf[32];
  if (v != 0 && (std::fabs(v) >= 1e5 || std::fabs(v) < 1e-3)) {
    std::snprintf(buf, sizeof buf, "%.2e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4g", v);
  }
  return buf;
}

}  // namespace detail

struct ChartStyle {
  Rgb background{255, 255, 255};
  Rgb axis{0, 0, 0};
  Rgb ink{40, 40, 40};
  Rgb bar{200, 40, 40};
  std::vector<Rgb> series{{200, 40, 40}, {40, 80, 200}, {40, 150, 60}, {160, 100, 20}};
  int scale = 2;  ///< font scale
};

/// Vertical bars with the value printed above each bar.
inline RgbImage bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                          std::string_view title = {}, const ChartStyle& st = {}) {
  const int n = static_cast<int>(values.size());
  const int bar_w = 48;
  const int gap = 20;
  const int left = 60, right = 20, top = 50, bottom = 40;
  const int plot_h = 260;
  const int w = left + right + std::max(1, n) * (bar_w + gap);
  const int h = top + plot_h + bottom;
  RgbImage img(w, h, st.background);
  detail::draw_text(img, left, 12, title, st.ink, st.scale);

  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  const double scale_to = vmax > 0 ? vmax : 1.0;
  const int y0 = top + plot_h;
  detail::draw_line(img, left - 4, y0, w - right, y0, st.axis);
  detail::draw_line(img, left - 4, top, left - 4, y0, st.axis);
  detail::draw_text(img, 4, y0 - 7, "0", st.ink, 1);
  detail::draw_text(img, 4, top - 3, detail::tick_label(scale_to), st.ink, 1);

  for (int i = 0; i < n; ++i) {
    const int x = left + i * (bar_w + gap) + gap / 2;
    const int bh = static_cast<int>(std::lround(plot_h * std::max(0.0, values[i]) / scale_to));
    detail::fill_rect(img, x, y0 - bh, x + bar_w, y0, st.bar);
    const auto v = detail::tick_label(values[i]);
    detail::draw_text(img, x + (bar_w - detail::text_width(v, 1)) / 2, y0 - bh - 10, v, st.ink, 1);
    if (i < static_cast<int>(labels.size())) {
      const auto& l = labels[i];
      detail::draw_text(img, x + (bar_w - detail::text_width(l, st.scale)) / 2, y0 + 8, l, st.ink, st.scale);
    }
  }
  return img;
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Polylines over a shared auto-scaled frame.
inline RgbImage line_chart(const std::vector<Series>& series, std::string_view title = {}, int width = 800,
                           int height = 400, const ChartStyle& st = {}) {
  RgbImage img(width, height, st.background);
  const int left = 80, right = 20, top = 50, bottom = 40;
  detail::draw_text(img, left, 12, title, st.ink, st.scale);
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (first) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const int pw = width - left - right;
  const int ph = height - top - bottom;
  auto px = [&](double x) { return left + static_cast<int>(std::lround((x - x0) / (x1 - x0) * pw)); };
  auto py = [&](double y) { return top + ph - static_cast<int>(std::lround((y - y0) / (y1 - y0) * ph)); };

  detail::draw_line(img, left, top + ph, left + pw, top + ph, st.axis);
  detail::draw_line(img, left, top, left, top + ph, st.axis);
  detail::draw_text(img, 4, top + ph - 7, detail::tick_label(y0), st.ink, 1);
  detail::draw_text(img, 4, top - 3, detail::tick_label(y1), st.ink, 1);
  detail::draw_text(img, left, top + ph + 8, detail::tick_label(x0), st.ink, 1);
  const auto xr = detail::tick_label(x1);
  detail::draw_text(img, left + pw - detail::text_width(xr, 1), top + ph + 8, xr, st.ink, 1);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const Rgb c = st.series.empty() ? st.ink : st.series[k % st.series.size()];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 1; i < n; ++i) {
      detail::draw_line(img, px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), c);
    }
    if (n == 1) detail::draw_line(img, px(s.x[0]), py(s.y[0]), px(s.x[0]), py(s.y[0]), c);
    detail::draw_text(img, left + pw - 160, top + 4 + static_cast<int>(k) * 12, s.name, c, 1);
  }
  return img;
}

}  // namespace myco
