#pragma once

// Independent reference computations used by the tests: breadth-first
// cluster labeling and exact enumeration over every edge configuration.

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dac/lattice.hpp"

namespace oracle {

struct Clusters {
  std::vector<int> id;           // per site, in order of smallest site
  std::vector<std::size_t> size;
  std::vector<bool> touches_boundary;
};

inline Clusters bfs_clusters(const dac::BoxLattice& box, const std::vector<bool>& open) {
  const auto edges = box.edges();
  std::vector<std::vector<std::size_t>> adj(box.site_count());
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (open[e]) {
      adj[edges[e].u].push_back(edges[e].v);
      adj[edges[e].v].push_back(edges[e].u);
    }
  Clusters c;
  c.id.assign(box.site_count(), -1);
  for (std::size_t s = 0; s < box.site_count(); ++s) {
    if (c.id[s] >= 0) continue;
    const int label = static_cast<int>(c.size.size());
    c.size.push_back(0);
    c.touches_boundary.push_back(false);
    std::deque<std::size_t> queue{s};
    c.id[s] = label;
    while (!queue.empty()) {
      const auto x = queue.front();
      queue.pop_front();
      ++c.size[label];
      if (box.on_boundary(x)) c.touches_boundary[label] = true;
      for (auto y : adj[x])
        if (c.id[y] < 0) {
          c.id[y] = label;
          queue.push_back(y);
        }
    }
  }
  return c;
}

/// Largest boundary-touching cluster, ties to the smallest label.
inline std::optional<int> boundary_largest(const Clusters& c) {
  std::optional<int> best;
  for (int k = 0; k < static_cast<int>(c.size.size()); ++k)
    if (c.touches_boundary[k] && (!best || c.size[k] > c.size[*best])) best = k;
  return best;
}

/// Sum over sites x of |C(x)|, every cluster finite.
inline std::uint64_t site_size_sum(const Clusters& c) {
  std::uint64_t s = 0;
  for (int id : c.id) s += c.size[id];
  return s;
}

struct Expectations {
  double k_n = 0.0;
  double square_sum = 0.0;   // E sum_x |C(x)|
  double configs = 0.0;
};

/// Exact expectations under Bernoulli(p) bonds by summing over all 2^E
/// configurations.
inline Expectations enumerate(const dac::BoxLattice& box, double p) {
  const std::size_t e = box.edge_count();
  if (e > 24) throw std::invalid_argument("enumerate: too many edges");
  Expectations out;
  std::vector<bool> open(e);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << e); ++mask) {
    int k = 0;
    for (std::size_t i = 0; i < e; ++i) {
      open[i] = (mask >> i) & 1u;
      k += open[i];
    }
    const double w = std::pow(p, k) * std::pow(1 - p, static_cast<double>(e) - k);
    const auto c = bfs_clusters(box, open);
    out.k_n += w * static_cast<double>(c.size.size());
    out.square_sum += w * static_cast<double>(site_size_sum(c));
    out.configs += 1;
  }
  return out;
}

}  // namespace oracle
