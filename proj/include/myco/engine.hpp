#pragma once

// Explicit-Euler FitzHugh-Nagumo integration on a conductive grid.

#include <algorithm>
#include <atomic>
#include <barrier>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "myco/grid.hpp"

namespace myco {

/// How a missing (non-conductive or off-grid) neighbour enters the
/// five-node Laplacian.
///   absorbing: the neighbour contributes 0 and the centre weight stays -4,
///              so poorly connected nodes leak.
///   no_flux:   the centre weight is -k, which is a zero-gradient boundary.
enum class LaplacianRule { absorbing, no_flux };

inline LaplacianRule parse_laplacian_rule(const std::string& s) {
  if (s == "absorbing") return LaplacianRule::absorbing;
  if (s == "no_flux") return LaplacianRule::no_flux;
  throw std::invalid_argument("unknown laplacian rule '" + s + "'");
}

inline std::string to_string(LaplacianRule r) {
  return r == LaplacianRule::absorbing ? "absorbing" : "no_flux";
}

struct FhnParams {
  double dt = 0.015;
  double dx = 2.0;
  double Du = 1.0;
  double a = 0.13;
  double b = 0.013;
  double c1 = 0.26;
  double c2 = 0.095;
  LaplacianRule rule = LaplacianRule::absorbing;

  void validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(dt) || dt <= 0) throw std::invalid_argument("dt must be > 0");
    if (!finite(dx) || dx <= 0) throw std::invalid_argument("dx must be > 0");
    if (!finite(Du) || Du < 0) throw std::invalid_argument("Du must be >= 0");
    if (!finite(a) || a <= 0 || a >= 1) throw std::invalid_argument("a must lie in (0, 1)");
    if (!finite(b) || !finite(c1) || !finite(c2)) {
      throw std::invalid_argument("b, c1, c2 must be finite");
    }
  }

  friend bool operator==(const FhnParams&, const FhnParams&) = default;
};

/// Full-grid state.  Non-conductive nodes hold u = v = 0.
struct FhnState {
  Field<double> u;
  Field<double> v;
  std::uint64_t t = 0;

  static FhnState rest(int width, int height) {
    return FhnState{Field<double>(width, height, 0.0), Field<double>(width, height, 0.0), 0};
  }

  friend bool operator==(const FhnState&, const FhnState&) = default;
};

/// Additive current `amplitude` at every locus for iterations
/// [onset, onset + duration).
struct Stimulus {
  std::vector<Node> loci;
  double amplitude = 0.5;
  std::uint64_t onset = 100;
  std::uint64_t duration = 100;

  bool active(std::uint64_t t) const noexcept { return t >= onset && t - onset < duration; }
  std::uint64_t end() const noexcept { return onset + duration; }
};

inline void validate_stimulus(const Stimulus& s, const ConductiveGrid& grid) {
  if (s.duration < 1) throw std::invalid_argument("stimulus duration must be >= 1");
  if (!(s.amplitude > 0) || !std::isfinite(s.amplitude)) {
    throw std::invalid_argument("stimulus amplitude must be > 0");
  }
  for (const auto& n : s.loci) {
    if (!grid.conductive(n)) {
      throw std::invalid_argument("stimulus locus (" + std::to_string(n.x) + "," +
                                  std::to_string(n.y) + ") is not conductive");
    }
  }
}

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t iteration, Node node)
      : std::runtime_error("non-finite state at iteration " + std::to_string(iteration) +
                           ", node (" + std::to_string(node.x) + "," + std::to_string(node.y) + ")"),
        iteration_(iteration),
        node_(node) {}

  std::uint64_t iteration() const noexcept { return iteration_; }
  Node node() const noexcept { return node_; }

 private:
  std::uint64_t iteration_;
  Node node_;
};

namespace detail {

struct Coefficients {
  double dt, inv_dx2, Du, a, b, c1, c2;

  explicit Coefficients(const FhnParams& p)
      : dt(p.dt), inv_dx2(1.0 / (p.dx * p.dx)), Du(p.Du), a(p.a), b(p.b), c1(p.c1), c2(p.c2) {}
};

/// Magnitudes below this are stored as exact zeros.  Diffusion tails would
/// otherwise decay into subnormals, which are an order of magnitude slower.
inline constexpr double kFlushBelow = 1e-100;

/// The single update rule shared by every stepping path, so the reference
/// stepper and the compact stepper agree bit for bit.
inline void fhn_update(double u, double v, double neighbor_sum, double center_weight, double current,
                       const Coefficients& c, double& u_out, double& v_out) noexcept {
  const double lap = (neighbor_sum - center_weight * u) * c.inv_dx2;
  const double un = u + c.dt * (c.c1 * u * (u - c.a) * (1.0 - u) - c.c2 * u * v + current + c.Du * lap);
  const double vn = v + c.dt * c.b * (u - v);
  u_out = std::abs(un) < kFlushBelow ? 0.0 : un;
  v_out = std::abs(vn) < kFlushBelow ? 0.0 : vn;
}

/// Bit 63 of the result is set iff `x` is inf or NaN: an all-ones exponent
/// carries into the sign position.  Branch-free so callers vectorize.
inline constexpr std::uint64_t kExponentMask = 0x7ff0000000000000ULL;
inline constexpr std::uint64_t kExponentCarry = 0x0010000000000000ULL;

inline std::uint64_t exponent_overflow(double x) noexcept {
  return (std::bit_cast<std::uint64_t>(x) & kExponentMask) + kExponentCarry;
}

struct SpanFlags {
  std::uint64_t overflow = 0;  ///< bit 63 set iff some output is non-finite
  std::uint64_t nonzero = 0;   ///< nonzero iff some output is not +0.0
};

/// Updates storage slots [begin, end) of a padded row-major layout with no
/// injected current.  Slots with negative weight are non-conductive and
/// are written as 0.
[[gnu::noinline]] inline SpanFlags update_span(const double* __restrict u, const double* __restrict v,
                                 const double* __restrict weight, double* __restrict u_out,
                                 double* __restrict v_out, std::size_t begin, std::size_t end,
                                 std::ptrdiff_t pitch, Coefficients c) noexcept {
  for (std::size_t i = begin; i < end; ++i) {
    const double* p = u + i;
    double s = 0.0;
    s += p[-pitch];
    s += p[pitch];
    s += p[-1];
    s += p[1];
    double uo, vo;
    fhn_update(u[i], v[i], s, weight[i], 0.0, c, uo, vo);
    u_out[i] = weight[i] >= 0.0 ? uo : 0.0;
    v_out[i] = weight[i] >= 0.0 ? vo : 0.0;
  }
  // Separate pass over the (cache-hot) row: folding these reductions into
  // the loop above stops GCC from vectorizing it.
  std::uint64_t bad = 0;
  std::uint64_t any = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const std::uint64_t ub = std::bit_cast<std::uint64_t>(u_out[i]);
    const std::uint64_t vb = std::bit_cast<std::uint64_t>(v_out[i]);
    bad |= ((ub & kExponentMask) + kExponentCarry) | ((vb & kExponentMask) + kExponentCarry);
    any |= ub | vb;
  }
  return {bad, any};
}

inline int conductive_neighbors4(const Mask& m, int x, int y) noexcept {
  int k = 0;
  for (const auto& d : kVonNeumann) k += m.get_or(x + d[0], y + d[1], 0) != 0;
  return k;
}

inline double center_weight(LaplacianRule rule, int k) noexcept {
  return rule == LaplacianRule::absorbing ? 4.0 : static_cast<double>(k);
}

/// Neighbour sum in fixed order (up, down, left, right); missing
/// neighbours add 0.0.
inline double neighbor_sum(const Field<double>& u, const Mask& m, int x, int y) noexcept {
  double s = 0.0;
  for (const auto& d : kVonNeumann) {
    const int nx = x + d[0];
    const int ny = y + d[1];
    s += m.get_or(nx, ny, 0) ? u(nx, ny) : 0.0;
  }
  return s;
}

}  // namespace detail

/// Five-node Laplacian restricted to conductive nodes; 0 elsewhere.
inline Field<double> laplacian(const Field<double>& u, const ConductiveGrid& grid, double dx,
                               LaplacianRule rule = LaplacianRule::absorbing) {
  Field<double> out(u.width(), u.height(), 0.0);
  const double inv_dx2 = 1.0 / (dx * dx);
  for (int y = 0; y < u.height(); ++y) {
    for (int x = 0; x < u.width(); ++x) {
      if (!grid.mask(x, y)) continue;
      const double w = detail::center_weight(rule, detail::conductive_neighbors4(grid.mask, x, y));
      out(x, y) = (detail::neighbor_sum(u, grid.mask, x, y) - w * u(x, y)) * inv_dx2;
    }
  }
  return out;
}

/// Summed stimulus current at `node` for iteration `t`.
inline double stimulus_current(std::span<const Stimulus> stimuli, Node node, std::uint64_t t) {
  double I = 0.0;
  for (const auto& s : stimuli) {
    if (!s.active(t)) continue;
    for (const auto& l : s.loci) {
      if (l == node) I += s.amplitude;
    }
  }
  return I;
}

/// Reference stepper over the full grid.  Straightforward and slow; the
/// `Simulator` below is the production path and must agree with it exactly.
inline FhnState step(const FhnState& state, const ConductiveGrid& grid, const FhnParams& params,
                     std::span<const Stimulus> stimuli = {}) {
  const detail::Coefficients c(params);
  FhnState next = FhnState::rest(state.u.width(), state.u.height());
  next.t = state.t + 1;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.mask(x, y)) continue;
      const double w = detail::center_weight(params.rule, detail::conductive_neighbors4(grid.mask, x, y));
      const double I = stimulus_current(stimuli, Node{x, y}, state.t);
      detail::fhn_update(state.u(x, y), state.v(x, y), detail::neighbor_sum(state.u, grid.mask, x, y),
                         w, I, c, next.u(x, y), next.v(x, y));
      if (!std::isfinite(next.u(x, y)) || !std::isfinite(next.v(x, y))) {
        throw DivergenceError(state.t, Node{x, y});
      }
    }
  }
  return next;
}

/// Dense padded layout of the grid: one ring of permanently-zero nodes
/// surrounds the domain so every stencil read is in bounds.  Per row, only
/// the span between the first and last conductive node is updated.
class GridLayout {
 public:
  GridLayout() = default;

  GridLayout(const ConductiveGrid& grid, LaplacianRule rule)
      : width_(grid.width()), height_(grid.height()), pitch_(grid.width() + 2) {
    const std::size_t total = static_cast<std::size_t>(pitch_) * static_cast<std::size_t>(height_ + 2);
    weight_.assign(total, -1.0);
    row_begin_.assign(static_cast<std::size_t>(height_), 0);
    row_end_.assign(static_cast<std::size_t>(height_), 0);
    for (int y = 0; y < height_; ++y) {
      int first = -1;
      int last = -1;
      for (int x = 0; x < width_; ++x) {
        if (!grid.mask(x, y)) continue;
        const std::size_t i = index(x, y);
        weight_[i] = detail::center_weight(rule, detail::conductive_neighbors4(grid.mask, x, y));
        nodes_.push_back(Node{x, y});
        slots_.push_back(static_cast<std::uint32_t>(i));
        if (first < 0) first = x;
        last = x;
      }
      if (first >= 0) {
        row_begin_[static_cast<std::size_t>(y)] = index(first, y);
        row_end_[static_cast<std::size_t>(y)] = index(last, y) + 1;
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::ptrdiff_t pitch() const noexcept { return pitch_; }
  std::size_t storage_size() const noexcept { return weight_.size(); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y + 1) * static_cast<std::size_t>(pitch_) + static_cast<std::size_t>(x + 1);
  }
  bool live(Node n) const noexcept {
    return n.x >= 0 && n.y >= 0 && n.x < width_ && n.y < height_ && weight_[index(n.x, n.y)] >= 0.0;
  }

  /// Conductive nodes in row-major order, and their storage indices.
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<std::uint32_t>& slots() const noexcept { return slots_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Per storage slot: Laplacian centre weight, or -1 for non-conductive.
  const double* weights() const noexcept { return weight_.data(); }
  std::size_t row_begin(int y) const noexcept { return row_begin_[static_cast<std::size_t>(y)]; }
  std::size_t row_end(int y) const noexcept { return row_end_[static_cast<std::size_t>(y)]; }

 private:
  int width_ = 0;
  int height_ = 0;
  int pitch_ = 0;
  std::vector<double> weight_;
  std::vector<std::size_t> row_begin_, row_end_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> slots_;
};

/// Production stepper.  Double buffered over the padded layout; each node
/// reads only the previous step's buffers, so with `workers > 1` (rows split
/// into contiguous bands) the result is identical to the serial one.
class Simulator {
 public:
  Simulator(const ConductiveGrid& grid, FhnParams params, std::vector<Stimulus> stimuli = {},
            int workers = 1)
      : params_(params), coeff_(params), layout_(grid, params.rule), stimuli_(std::move(stimuli)) {
    params_.validate();
    for (const auto& s : stimuli_) validate_stimulus(s, grid);
    const std::size_t n = layout_.storage_size();
    u_.assign(n, 0.0);
    v_.assign(n, 0.0);
    u_next_.assign(n, 0.0);
    v_next_.assign(n, 0.0);
    current_.assign(n, 0.0);
    live_row_.assign(static_cast<std::size_t>(layout_.height()), 0);
    live_row_next_.assign(static_cast<std::size_t>(layout_.height()), 0);
    for (const auto& s : stimuli_) {
      std::vector<std::uint32_t> idx;
      idx.reserve(s.loci.size());
      for (const auto& l : s.loci) idx.push_back(static_cast<std::uint32_t>(layout_.index(l.x, l.y)));
      stimulus_slots_.push_back(std::move(idx));
    }
    start_workers(std::clamp(workers, 1, std::max(1, layout_.height())));
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  ~Simulator() { stop_workers(); }

  const FhnParams& params() const noexcept { return params_; }
  const GridLayout& layout() const noexcept { return layout_; }
  std::uint64_t iteration() const noexcept { return t_; }
  int workers() const noexcept { return static_cast<int>(threads_.size()) + 1; }

  /// Padded storage; index with `layout().index(x, y)` or `layout().slots()`.
  std::span<const double> u() const noexcept { return u_; }
  std::span<const double> v() const noexcept { return v_; }

  void load(const FhnState& s) {
    if (s.u.width() != layout_.width() || s.u.height() != layout_.height() ||
        s.v.width() != layout_.width() || s.v.height() != layout_.height()) {
      throw std::invalid_argument("state dimensions do not match the grid");
    }
    std::fill(u_.begin(), u_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
    const auto& nodes = layout_.nodes();
    const auto& slots = layout_.slots();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double uu = s.u(nodes[i].x, nodes[i].y);
      const double vv = s.v(nodes[i].x, nodes[i].y);
      if (!std::isfinite(uu) || !std::isfinite(vv)) {
        throw std::invalid_argument("initial state is not finite");
      }
      u_[slots[i]] = uu;
      v_[slots[i]] = vv;
    }
    // Conservatively wake every row; the next step recomputes the flags.
    std::fill(u_next_.begin(), u_next_.end(), 0.0);
    std::fill(v_next_.begin(), v_next_.end(), 0.0);
    std::fill(live_row_.begin(), live_row_.end(), 1);
    std::fill(live_row_next_.begin(), live_row_next_.end(), 0);
    t_ = s.t;
  }

  FhnState state() const {
    FhnState s = FhnState::rest(layout_.width(), layout_.height());
    const auto& nodes = layout_.nodes();
    const auto& slots = layout_.slots();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      s.u(nodes[i].x, nodes[i].y) = u_[slots[i]];
      s.v(nodes[i].x, nodes[i].y) = v_[slots[i]];
    }
    s.t = t_;
    return s;
  }

  /// Advances one iteration.  Throws DivergenceError (state unchanged) if
  /// any updated value is non-finite.
  void advance() {
    refresh_current();
    if (threads_.empty()) {
      band_failed_[0] = update_rows(0, layout_.height());
    } else {
      start_->arrive_and_wait();
      band_failed_[0] = update_rows(band_begin(0), band_begin(1));
      done_->arrive_and_wait();
    }
    bool failed = apply_current();
    for (auto f : band_failed_) failed = failed || f;
    if (failed) throw DivergenceError(t_, locate_non_finite());
    std::swap(u_, u_next_);
    std::swap(v_, v_next_);
    std::swap(live_row_, live_row_next_);
    ++t_;
  }

 private:
  void refresh_current() {
    for (auto i : touched_) current_[i] = 0.0;
    touched_.clear();
    for (std::size_t s = 0; s < stimuli_.size(); ++s) {
      if (!stimuli_[s].active(t_)) continue;
      for (auto i : stimulus_slots_[s]) {
        current_[i] += stimuli_[s].amplitude;
        touched_.push_back(i);
      }
    }
  }

  /// A row whose own and adjacent rows are exactly zero stays exactly zero
  /// (0 is a fixed point of the update and flushing yields +0.0), so it is
  /// skipped; stimulated nodes are handled by `apply_current`.
  bool update_rows(int y0, int y1) noexcept {
    const std::ptrdiff_t pitch = layout_.pitch();
    const double* __restrict u = u_.data();
    const double* __restrict v = v_.data();
    double* __restrict un = u_next_.data();
    double* __restrict vn = v_next_.data();
    const double* __restrict w = layout_.weights();
    const int h = layout_.height();
    std::uint64_t bad = 0;
    for (int y = y0; y < y1; ++y) {
      const std::size_t b = layout_.row_begin(y);
      const std::size_t e = layout_.row_end(y);
      const bool awake = live_row_[static_cast<std::size_t>(y)] ||
                         (y > 0 && live_row_[static_cast<std::size_t>(y - 1)]) ||
                         (y + 1 < h && live_row_[static_cast<std::size_t>(y + 1)]);
      if (!awake) {
        if (live_row_next_[static_cast<std::size_t>(y)]) {
          std::fill(un + b, un + e, 0.0);
          std::fill(vn + b, vn + e, 0.0);
          live_row_next_[static_cast<std::size_t>(y)] = 0;
        }
        continue;
      }
      const auto f = detail::update_span(u, v, w, un, vn, b, e, pitch, coeff_);
      bad |= f.overflow;
      live_row_next_[static_cast<std::size_t>(y)] = f.nonzero != 0;
    }
    return (bad >> 63) != 0;
  }

  /// Re-evaluates stimulated nodes with their injected current.
  bool apply_current() noexcept {
    const double* u = u_.data();
    const double* w = layout_.weights();
    std::uint64_t bad = 0;
    for (auto i : touched_) {
      if (current_[i] == 0.0) continue;
      detail::fhn_update(u[i], v_[i], stencil_sum(u, i, layout_.pitch()),
                         w[i], current_[i], coeff_, u_next_[i], v_next_[i]);
      bad |= detail::exponent_overflow(u_next_[i]) | detail::exponent_overflow(v_next_[i]);
      if (u_next_[i] != 0.0 || v_next_[i] != 0.0) {
        live_row_next_[i / static_cast<std::size_t>(layout_.pitch()) - 1] = 1;
      }
    }
    return (bad >> 63) != 0;
  }

  static double stencil_sum(const double* u, std::size_t i, std::ptrdiff_t pitch) noexcept {
    const double* c = u + i;
    double s = 0.0;
    s += c[-pitch];
    s += c[pitch];
    s += c[-1];
    s += c[1];
    return s;
  }

  Node locate_non_finite() const noexcept {
    const auto& nodes = layout_.nodes();
    const auto& slots = layout_.slots();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!std::isfinite(u_next_[slots[i]]) || !std::isfinite(v_next_[slots[i]])) return nodes[i];
    }
    return Node{-1, -1};
  }

  int band_begin(int band) const noexcept {
    const int bands = static_cast<int>(threads_.size()) + 1;
    return static_cast<int>(static_cast<long long>(layout_.height()) * band / bands);
  }

  void start_workers(int workers) {
    band_failed_.assign(static_cast<std::size_t>(workers), false);
    if (workers == 1) return;
    start_.emplace(workers);
    done_.emplace(workers);
    for (int w = 1; w < workers; ++w) {
      threads_.emplace_back([this, w] {
        for (;;) {
          start_->arrive_and_wait();
          if (stopping_.load(std::memory_order_acquire)) return;
          band_failed_[static_cast<std::size_t>(w)] = update_rows(band_begin(w), band_begin(w + 1));
          done_->arrive_and_wait();
        }
      });
    }
  }

  void stop_workers() {
    if (threads_.empty()) return;
    stopping_.store(true, std::memory_order_release);
    start_->arrive_and_wait();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  FhnParams params_;
  detail::Coefficients coeff_;
  GridLayout layout_;
  std::vector<Stimulus> stimuli_;
  std::vector<std::vector<std::uint32_t>> stimulus_slots_;
  std::vector<double> u_, v_, u_next_, v_next_, current_;
  std::vector<std::uint32_t> touched_;
  std::vector<std::uint8_t> live_row_, live_row_next_;
  std::uint64_t t_ = 0;

  std::vector<char> band_failed_;
  std::optional<std::barrier<>> start_;
  std::optional<std::barrier<>> done_;
  std::vector<std::thread> threads_;
  std::atomic<bool> stopping_{false};
};

// ---------------------------------------------------------------------------
// Checkpoints.  Layout (all little-endian):
//   "MYCOCKPT" | u32 version | u32 width | u32 height | u32 rule |
//   f64 dt, dx, Du, a, b, c1, c2 | u64 t | f64 u[w*h] | f64 v[w*h]
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  FhnParams params;
  FhnState state;
};

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(bytes[sizeof(T) - 1 - i]);
  } else {
    out.insert(out.end(), bytes, bytes + sizeof(T));
  }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw std::runtime_error("checkpoint truncated");
  std::uint8_t bytes[sizeof(T)];
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = in[pos + sizeof(T) - 1 - i];
  } else {
    std::memcpy(bytes, in.data() + pos, sizeof(T));
  }
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp) {
  std::vector<std::uint8_t> out;
  const char magic[8] = {'M', 'Y', 'C', 'O', 'C', 'K', 'P', 'T'};
  out.insert(out.end(), magic, magic + 8);
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cp.state.u.width()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cp.state.u.height()));
  detail::put_le<std::uint32_t>(out, cp.params.rule == LaplacianRule::absorbing ? 0u : 1u);
  for (double x : {cp.params.dt, cp.params.dx, cp.params.Du, cp.params.a, cp.params.b, cp.params.c1,
                   cp.params.c2}) {
    detail::put_le<double>(out, x);
  }
  detail::put_le<std::uint64_t>(out, cp.state.t);
  for (double x : cp.state.u.data()) detail::put_le<double>(out, x);
  for (double x : cp.state.v.data()) detail::put_le<double>(out, x);
  return out;
}

inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& in) {
  if (in.size() < 8 || std::memcmp(in.data(), "MYCOCKPT", 8) != 0) {
    throw std::runtime_error("not a checkpoint file");
  }
  std::size_t pos = 8;
  const auto version = detail::get_le<std::uint32_t>(in, pos);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto w = detail::get_le<std::uint32_t>(in, pos);
  const auto h = detail::get_le<std::uint32_t>(in, pos);
  const auto rule = detail::get_le<std::uint32_t>(in, pos);
  if (rule > 1) throw std::runtime_error("checkpoint: bad laplacian rule");
  Checkpoint cp;
  cp.params.rule = rule == 0 ? LaplacianRule::absorbing : LaplacianRule::no_flux;
  cp.params.dt = detail::get_le<double>(in, pos);
  cp.params.dx = detail::get_le<double>(in, pos);
  cp.params.Du = detail::get_le<double>(in, pos);
  cp.params.a = detail::get_le<double>(in, pos);
  cp.params.b = detail::get_le<double>(in, pos);
  cp.params.c1 = detail::get_le<double>(in, pos);
  cp.params.c2 = detail::get_le<double>(in, pos);
  const auto t = detail::get_le<std::uint64_t>(in, pos);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (in.size() - pos != n * 16) throw std::runtime_error("checkpoint size mismatch");
  cp.state = FhnState::rest(static_cast<int>(w), static_cast<int>(h));
  cp.state.t = t;
  for (std::size_t i = 0; i < n; ++i) cp.state.u[i] = detail::get_le<double>(in, pos);
  for (std::size_t i = 0; i < n; ++i) cp.state.v[i] = detail::get_le<double>(in, pos);
  return cp;
}

inline void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(cp);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("cannot write checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace myco
