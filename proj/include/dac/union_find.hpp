#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace dac {

/// Disjoint sets over [0, n) with union by size and path halving.
template <class Index = std::uint32_t>
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }

  Index find(Index x) noexcept {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Returns true when x and y were in different sets.
  bool unite(Index x, Index y) noexcept {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    if (size_[x] < size_[y] || (size_[x] == size_[y] && y < x)) std::swap(x, y);
    parent_[y] = x;
    size_[x] += size_[y];
    return true;
  }

  Index set_size(Index x) noexcept { return size_[find(x)]; }
  std::size_t element_count() const noexcept { return parent_.size(); }

 private:
  std::vector<Index> parent_;
  std::vector<Index> size_;
};

}  // namespace dac
