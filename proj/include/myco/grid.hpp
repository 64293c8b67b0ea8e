#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace myco {

/// File could not be opened, written or read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid coordinate: x is the column, y is the row.
struct Node {
  int x = 0;
  int y = 0;
  friend bool operator==(const Node&, const Node&) = default;
};

/// Row-major scalar field over a width x height grid.
template <typename T>
class Field {
 public:
  using value_type = T;

  Field() = default;
  Field(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw std::invalid_argument("Field: negative dimensions");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool contains(Node n) const noexcept { return contains(n.x, n.y); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Value at (x, y), or `outside` when the coordinate is off-grid.
  T get_or(int x, int y, T outside) const noexcept {
    return contains(x, y) ? data_[index(x, y)] : outside;
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Boolean grid stored as bytes (0 / 1).
using Mask = Field<std::uint8_t>;

inline std::size_t count_true(const Mask& m) {
  std::size_t n = 0;
  for (auto b : m.data()) n += b != 0;
  return n;
}

/// Von Neumann (4) and Moore (8) neighbourhoods.
enum class Neighborhood { von_neumann, moore };

inline constexpr int kVonNeumann[4][2] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
inline constexpr int kMoore[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                     {1, 0},   {-1, 1}, {0, 1},  {1, 1}};

inline Neighborhood parse_neighborhood(const std::string& s) {
  if (s == "von_neumann" || s == "4") return Neighborhood::von_neumann;
  if (s == "moore" || s == "8") return Neighborhood::moore;
  throw std::invalid_argument("unknown neighbourhood '" + s + "'");
}

inline std::string to_string(Neighborhood n) {
  return n == Neighborhood::von_neumann ? "von_neumann" : "moore";
}

/// Binary conductivity mask plus per-node conductive-neighbour count.
///
/// `k` is stored as 0 on non-conductive nodes.  Out-of-bounds neighbours
/// count as non-conductive.
struct ConductiveGrid {
  Mask mask;
  Field<std::uint8_t> k;
  Neighborhood neighborhood = Neighborhood::von_neumann;

  int width() const noexcept { return mask.width(); }
  int height() const noexcept { return mask.height(); }
  bool conductive(int x, int y) const noexcept { return mask.get_or(x, y, 0) != 0; }
  bool conductive(Node n) const noexcept { return conductive(n.x, n.y); }
  std::size_t conductive_count() const { return count_true(mask); }

  friend bool operator==(const ConductiveGrid&, const ConductiveGrid&) = default;
};

}  // namespace myco
