#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dac {

struct Edge {
  std::size_t u;
  std::size_t v;
  int axis;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// The box {-n..n}^d of the cubic lattice with free boundary.
///
/// Sites are flat indices in odometer order, axis 0 varying fastest:
/// index = sum_k (x_k + n) * side^k. Edges are enumerated by (site, axis)
/// in increasing order; the edge of a site along an axis goes to the
/// neighbor one step in the positive direction.
class BoxLattice {
 public:
  BoxLattice(int dim, int radius) : dim_(dim), radius_(radius) {
    if (dim < 1) throw std::invalid_argument("lattice: dimension must be >= 1");
    if (radius < 0) throw std::invalid_argument("lattice: radius must be >= 0");
    side_ = 2 * static_cast<std::size_t>(radius) + 1;
    strides_.resize(dim);
    std::size_t count = 1;
    for (int a = 0; a < dim; ++a) {
      strides_[a] = count;
      count = checked_mul(count, side_);
    }
    site_count_ = count;
    // d * (2n) * (2n+1)^(d-1)
    edge_count_ = checked_mul(checked_mul(static_cast<std::size_t>(dim), side_ - 1),
                              count / side_);
  }

  int dim() const noexcept { return dim_; }
  int radius() const noexcept { return radius_; }
  std::size_t side() const noexcept { return side_; }
  std::size_t site_count() const noexcept { return site_count_; }
  std::size_t edge_count() const noexcept { return edge_count_; }
  std::size_t stride(int axis) const noexcept { return strides_[axis]; }

  std::size_t origin() const noexcept { return (site_count_ - 1) / 2; }

  /// Coordinate of a site along one axis, in [-n, n].
  int coord(std::size_t site, int axis) const noexcept {
    return static_cast<int>((site / strides_[axis]) % side_) - radius_;
  }

  std::vector<int> coords_of(std::size_t site) const {
    std::vector<int> x(dim_);
    for (int a = 0; a < dim_; ++a) x[a] = coord(site, a);
    return x;
  }

  std::size_t index_of(std::span<const int> x) const {
    if (static_cast<int>(x.size()) != dim_)
      throw std::invalid_argument("lattice: coordinate has wrong dimension");
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) {
      if (x[a] < -radius_ || x[a] > radius_)
        throw std::out_of_range("lattice: coordinate outside the box");
      idx += static_cast<std::size_t>(x[a] + radius_) * strides_[a];
    }
    return idx;
  }

  bool contains(std::span<const int> x) const noexcept {
    if (static_cast<int>(x.size()) != dim_) return false;
    for (int v : x)
      if (v < -radius_ || v > radius_) return false;
    return true;
  }

  int linf_norm(std::size_t site) const noexcept {
    int r = 0;
    for (int a = 0; a < dim_; ++a) {
      const int c = coord(site, a);
      r = std::max(r, c < 0 ? -c : c);
    }
    return r;
  }

  bool on_boundary(std::size_t site) const noexcept {
    return linf_norm(site) == radius_;
  }

  /// Site reached from `site` by adding `offset`, if it stays in the box.
  std::optional<std::size_t> translate(std::size_t site,
                                       std::span<const int> offset) const {
    if (static_cast<int>(offset.size()) != dim_)
      throw std::invalid_argument("lattice: offset has wrong dimension");
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) {
      const int c = coord(site, a) + offset[a];
      if (c < -radius_ || c > radius_) return std::nullopt;
      idx += static_cast<std::size_t>(c + radius_) * strides_[a];
    }
    return idx;
  }

  std::vector<std::size_t> neighbors(std::size_t site) const {
    std::vector<std::size_t> out;
    out.reserve(2 * dim_);
    for (int a = 0; a < dim_; ++a) {
      const int c = coord(site, a);
      if (c > -radius_) out.push_back(site - strides_[a]);
      if (c < radius_) out.push_back(site + strides_[a]);
    }
    return out;
  }

  /// Calls f(edge_index, Edge) for every edge in enumeration order.
  template <class F>
  void for_each_edge(F&& f) const {
    std::vector<int> x(dim_, -radius_);
    std::size_t e = 0;
    for (std::size_t s = 0; s < site_count_; ++s) {
      for (int a = 0; a < dim_; ++a) {
        if (x[a] < radius_) f(e++, Edge{s, s + strides_[a], a});
      }
      for (int a = 0; a < dim_; ++a) {  // odometer step
        if (++x[a] <= radius_) break;
        x[a] = -radius_;
      }
    }
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for_each_edge([&](std::size_t, const Edge& e) { out.push_back(e); });
    return out;
  }

  friend bool operator==(const BoxLattice& a, const BoxLattice& b) noexcept {
    return a.dim_ == b.dim_ && a.radius_ == b.radius_;
  }

 private:
  static std::size_t checked_mul(std::size_t a, std::size_t b) {
    if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
      throw std::overflow_error("lattice: box size overflows the index range");
    return a * b;
  }

  int dim_;
  int radius_;
  std::size_t side_ = 1;
  std::size_t site_count_ = 1;
  std::size_t edge_count_ = 0;
  std::vector<std::size_t> strides_;
};

inline BoxLattice build_box(int dim, int radius) { return BoxLattice(dim, radius); }

/// Sites of the centered sub-box of radius n - margin, ascending.
inline std::vector<std::size_t> inner_window(const BoxLattice& lattice, int margin) {
  if (margin < 0 || margin > lattice.radius())
    throw std::invalid_argument("inner_window: margin must lie in [0, " +
                                std::to_string(lattice.radius()) + "]");
  const int r = lattice.radius() - margin;
  std::vector<std::size_t> out;
  std::size_t expected = 1;
  for (int a = 0; a < lattice.dim(); ++a) expected *= 2 * static_cast<std::size_t>(r) + 1;
  out.reserve(expected);
  for (std::size_t s = 0; s < lattice.site_count(); ++s)
    if (lattice.linf_norm(s) <= r) out.push_back(s);
  return out;
}

}  // namespace dac
