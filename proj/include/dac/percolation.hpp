#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dac/lattice.hpp"
#include "dac/parallel.hpp"
#include "dac/rng.hpp"
#include "dac/stats.hpp"
#include "dac/union_find.hpp"

namespace dac {

/// Raised when an internal identity that must hold exactly is violated.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// How the finite box picks its stand-in for the infinite cluster.
enum class ProxyRule {
  BoundaryLargest,  // largest boundary-touching cluster, ties to the smallest id
  Disabled,         // no proxy; every cluster is treated as finite
};

inline std::string_view to_string(ProxyRule r) noexcept {
  return r == ProxyRule::BoundaryLargest ? "boundary-largest" : "disabled";
}

inline ProxyRule parse_proxy_rule(std::string_view s) {
  if (s == "boundary-largest") return ProxyRule::BoundaryLargest;
  if (s == "disabled") return ProxyRule::Disabled;
  throw std::invalid_argument("unknown proxy rule '" + std::string(s) +
                              "' (expected boundary-largest or disabled)");
}

/// One bond configuration; bit e is edge e in BoxLattice enumeration order.
struct EdgeConfig {
  BoxLattice lattice;
  std::vector<bool> open;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string stream_tag;

  std::size_t open_count() const noexcept {
    std::size_t c = 0;
    for (bool b : open) c += b;
    return c;
  }
};

/// Edge e is open iff the e-th uniform of the (seed, tag) stream is below
/// p. Configurations at different p from the same stream are therefore
/// monotonically coupled.
inline EdgeConfig sample_config(const BoxLattice& lattice, double p, std::uint64_t seed,
                                std::string_view stream_tag = "graph") {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sample_config: p must lie in [0, 1]");
  EdgeConfig cfg{lattice, std::vector<bool>(lattice.edge_count()), p, seed,
                 std::string(stream_tag)};
  Rng rng(seed, stream_tag);
  for (std::size_t e = 0; e < cfg.open.size(); ++e) cfg.open[e] = rng.uniform() < p;
  return cfg;
}

/// Cluster partition of one configuration.
///
/// Cluster ids are assigned in increasing order of each cluster's smallest
/// site index, so representative[] is sorted and ids are stable for a given
/// configuration regardless of union order.
struct ClusterLabeling {
  BoxLattice lattice;
  ProxyRule proxy_rule = ProxyRule::BoundaryLargest;
  std::vector<std::uint32_t> cluster_id{};
  std::vector<std::size_t> cluster_sizes{};
  std::vector<std::size_t> representative{};
  std::vector<bool> touches_boundary{};
  std::optional<std::uint32_t> infinite_proxy{};
  std::vector<std::size_t> finite_cluster_reps{};
  std::size_t k_n = 0;
  std::size_t merges = 0;  // unions that joined distinct sets

  bool in_proxy(std::size_t site) const noexcept {
    return infinite_proxy && cluster_id[site] == *infinite_proxy;
  }

  /// |Lambda_n ∩ I| for the proxy; 0 without one.
  std::size_t infinite_count() const noexcept {
    return infinite_proxy ? cluster_sizes[*infinite_proxy] : 0;
  }

  /// |C'(x)| measured in the full box: 0 on the proxy.
  std::size_t finite_size(std::size_t site) const noexcept {
    return in_proxy(site) ? 0 : cluster_sizes[cluster_id[site]];
  }

  std::vector<std::uint32_t> boundary_touching() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t c = 0; c < touches_boundary.size(); ++c)
      if (touches_boundary[c]) out.push_back(c);
    return out;
  }
};

inline ClusterLabeling label_clusters(const EdgeConfig& config,
                                      ProxyRule rule = ProxyRule::BoundaryLargest) {
  const BoxLattice& lat = config.lattice;
  if (config.open.size() != lat.edge_count())
    throw std::invalid_argument("label_clusters: bitset length differs from edge count");
  if (lat.site_count() > std::numeric_limits<std::uint32_t>::max())
    throw std::length_error("label_clusters: box too large for 32-bit labels");

  UnionFind<std::uint32_t> uf(lat.site_count());
  ClusterLabeling out{lat, rule};
  lat.for_each_edge([&](std::size_t e, const Edge& edge) {
    if (config.open[e])
      out.merges += uf.unite(static_cast<std::uint32_t>(edge.u),
                             static_cast<std::uint32_t>(edge.v));
  });

  constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> id_of_root(lat.site_count(), unset);
  out.cluster_id.resize(lat.site_count());
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    const auto root = uf.find(static_cast<std::uint32_t>(s));
    auto& id = id_of_root[root];
    if (id == unset) {
      id = static_cast<std::uint32_t>(out.cluster_sizes.size());
      out.cluster_sizes.push_back(0);
      out.representative.push_back(s);
      out.touches_boundary.push_back(false);
    }
    out.cluster_id[s] = id;
    ++out.cluster_sizes[id];
    if (lat.on_boundary(s)) out.touches_boundary[id] = true;
  }
  out.k_n = out.cluster_sizes.size();

  if (rule == ProxyRule::BoundaryLargest) {
    for (std::uint32_t c = 0; c < out.k_n; ++c) {
      if (!out.touches_boundary[c]) continue;
      if (!out.infinite_proxy || out.cluster_sizes[c] > out.cluster_sizes[*out.infinite_proxy])
        out.infinite_proxy = c;
    }
  }
  out.finite_cluster_reps.reserve(out.k_n);
  for (std::uint32_t c = 0; c < out.k_n; ++c)
    if (!out.infinite_proxy || c != *out.infinite_proxy)
      out.finite_cluster_reps.push_back(out.representative[c]);
  return out;
}

/// Both sides of the square-sum identity over a window W:
/// sum over x in W of |C'(x) ∩ W| and sum over finite clusters of |A_i ∩ W|^2.
struct SquareSum {
  std::uint64_t per_site = 0;
  std::uint64_t per_cluster = 0;
  std::size_t window_size = 0;

  double density() const noexcept {
    return static_cast<double>(per_site) / static_cast<double>(window_size);
  }
};

/// Computes both sums independently and throws InvariantViolation if they
/// differ.
inline SquareSum square_sum_parts(const ClusterLabeling& labeling,
                                  std::span<const std::size_t> window) {
  if (window.empty()) throw std::invalid_argument("square_sum: empty window");
  std::vector<std::uint64_t> in_window(labeling.k_n, 0);
  for (std::size_t s : window) ++in_window[labeling.cluster_id[s]];

  SquareSum r;
  r.window_size = window.size();
  for (std::size_t s : window)
    if (!labeling.in_proxy(s)) r.per_site += in_window[labeling.cluster_id[s]];
  for (std::uint32_t c = 0; c < labeling.k_n; ++c)
    if (!labeling.infinite_proxy || c != *labeling.infinite_proxy)
      r.per_cluster += in_window[c] * in_window[c];
  if (r.per_site != r.per_cluster)
    throw InvariantViolation("square-sum identity violated: per-site " +
                             std::to_string(r.per_site) + " != per-cluster " +
                             std::to_string(r.per_cluster));
  return r;
}

inline SquareSum square_sum_parts(const ClusterLabeling& labeling, int window_margin) {
  const auto w = inner_window(labeling.lattice, window_margin);
  return square_sum_parts(labeling, w);
}

inline double square_sum_density(const ClusterLabeling& labeling, int window_margin) {
  return square_sum_parts(labeling, window_margin).density();
}

/// ceil(4 ln(2n+1)), clamped to the box radius.
inline int default_margin(const BoxLattice& lattice) {
  const int m = static_cast<int>(std::ceil(4.0 * std::log(static_cast<double>(lattice.side()))));
  return std::min(m, lattice.radius());
}

/// Warning text when p sits within 0.02 of the planar bond threshold.
inline std::optional<std::string> near_critical_warning(int dim, double p) {
  if (dim == 2 && std::abs(p - 0.5) < 0.02)
    return "p=" + std::to_string(p) +
           " is within 0.02 of the critical point p_c=1/2; the limit theorems exclude p_c";
  return std::nullopt;
}

/// Per-configuration quantities over an inner window W.
struct WindowObservables {
  std::size_t window_size = 0;
  std::size_t in_proxy = 0;            // |W ∩ I|
  std::uint64_t finite_size_sum = 0;   // sum over W of |C'(x)|, clusters measured in the full box
  std::uint64_t square_sum = 0;        // sum over finite clusters of |A_i ∩ W|^2
  std::size_t k_n = 0;
  std::size_t infinite_count = 0;      // |Lambda_n ∩ I|
};

inline WindowObservables observe_window(const ClusterLabeling& labeling,
                                        std::span<const std::size_t> window) {
  WindowObservables o;
  o.window_size = window.size();
  for (std::size_t s : window) {
    o.in_proxy += labeling.in_proxy(s);
    o.finite_size_sum += labeling.finite_size(s);
  }
  o.square_sum = square_sum_parts(labeling, window).per_site;
  o.k_n = labeling.k_n;
  o.infinite_count = labeling.infinite_count();
  return o;
}

struct PercolationEstimates {
  double theta_hat = 0.0, theta_se = 0.0;
  double chi_f_hat = 0.0, chi_f_se = 0.0;
  double kappa_hat = 0.0, kappa_se = 0.0;
  double sigma_p2_hat = 0.0, sigma_p2_se = 0.0;
  double square_sum_density = 0.0, square_sum_density_se = 0.0;
  std::size_t replicates = 0;
  int margin = 0;
  std::size_t window_size = 0;
  ProxyRule proxy_rule = ProxyRule::BoundaryLargest;
};

/// Aggregates per-replicate window observables. Point estimates are ratios
/// of integer totals, so degenerate inputs give exact values.
inline PercolationEstimates aggregate_estimates(std::span<const WindowObservables> obs,
                                                std::size_t site_count, int margin,
                                                ProxyRule rule) {
  if (obs.empty()) throw std::invalid_argument("estimates: no replicates");
  PercolationEstimates est;
  est.replicates = obs.size();
  est.margin = margin;
  est.window_size = obs.front().window_size;
  est.proxy_rule = rule;

  const double w = static_cast<double>(est.window_size);
  const double sites = static_cast<double>(site_count);
  std::uint64_t in_proxy = 0, finite = 0, square = 0, clusters = 0;
  std::vector<double> theta_r, chi_r, kappa_r, ssd_r, proxy_count;
  for (const auto& o : obs) {
    in_proxy += o.in_proxy;
    finite += o.finite_size_sum;
    square += o.square_sum;
    clusters += o.k_n;
    theta_r.push_back(static_cast<double>(o.in_proxy) / w);
    chi_r.push_back(static_cast<double>(o.finite_size_sum) / w);
    kappa_r.push_back(static_cast<double>(o.k_n) / sites);
    ssd_r.push_back(static_cast<double>(o.square_sum) / w);
    proxy_count.push_back(static_cast<double>(o.in_proxy));
  }
  const double total_w = w * static_cast<double>(obs.size());
  est.theta_hat = static_cast<double>(in_proxy) / total_w;
  est.chi_f_hat = static_cast<double>(finite) / total_w;
  est.kappa_hat = static_cast<double>(clusters) / (sites * static_cast<double>(obs.size()));
  est.square_sum_density = static_cast<double>(square) / total_w;

  if (obs.size() > 1) {
    est.theta_se = summarize(theta_r).se_mean;
    est.chi_f_se = summarize(chi_r).se_mean;
    est.kappa_se = summarize(kappa_r).se_mean;
    est.square_sum_density_se = summarize(ssd_r).se_mean;
    const auto s = summarize(proxy_count);
    est.sigma_p2_hat = s.variance / w;
    est.sigma_p2_se = s.se_variance / w;
  } else {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    est.theta_se = est.chi_f_se = est.kappa_se = est.square_sum_density_se = nan;
    est.sigma_p2_se = nan;
  }
  return est;
}

/// Monte Carlo estimates of theta, chi^f, kappa, sigma_p^2 and the
/// square-sum density. Replicate r uses graph stream
/// (replicate_seed(seed, r), "graph").
inline PercolationEstimates estimate_functionals(const BoxLattice& lattice, double p,
                                                 std::size_t replicates, std::uint64_t seed,
                                                 int margin,
                                                 ProxyRule rule = ProxyRule::BoundaryLargest,
                                                 unsigned workers = 1) {
  if (replicates == 0) throw std::invalid_argument("estimate_functionals: replicates must be >= 1");
  const auto window = inner_window(lattice, margin);
  std::vector<WindowObservables> obs(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    const auto cfg = sample_config(lattice, p, replicate_seed(seed, r), "graph");
    obs[r] = observe_window(label_clusters(cfg, rule), window);
  });
  return aggregate_estimates(obs, lattice.site_count(), margin, rule);
}

struct SigmaP2Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t replicates = 0;
  std::size_t replicates_with_proxy = 0;
  bool no_proxy = false;  // diagnostic: no replicate had an infinite-cluster proxy
};

/// Across-configuration variance of |Lambda_n ∩ I| divided by the site count.
inline SigmaP2Estimate estimate_sigma_p2(const BoxLattice& lattice, double p,
                                         std::size_t replicates, std::uint64_t seed,
                                         unsigned workers = 1,
                                         ProxyRule rule = ProxyRule::BoundaryLargest) {
  if (replicates < 2) throw std::invalid_argument("estimate_sigma_p2: replicates must be >= 2");
  std::vector<double> counts(replicates);
  std::vector<char> has_proxy(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    const auto lab = label_clusters(sample_config(lattice, p, replicate_seed(seed, r), "graph"), rule);
    counts[r] = static_cast<double>(lab.infinite_count());
    has_proxy[r] = lab.infinite_proxy.has_value();
  });
  SigmaP2Estimate est;
  est.replicates = replicates;
  for (char h : has_proxy) est.replicates_with_proxy += h;
  if (est.replicates_with_proxy == 0) {
    est.no_proxy = true;
    return est;
  }
  const auto s = summarize(counts);
  const double sites = static_cast<double>(lattice.site_count());
  est.value = s.variance / sites;
  est.se = s.se_variance / sites;
  return est;
}

struct ConnectivityEstimate {
  std::vector<int> offset;
  double probability = 0.0;
  double se = 0.0;
};

/// Empirical P(origin and origin+k share a cluster) for each offset k.
inline std::vector<ConnectivityEstimate> connectivity_profile(
    const BoxLattice& lattice, double p, const std::vector<std::vector<int>>& offsets,
    std::size_t replicates, std::uint64_t seed, unsigned workers = 1) {
  if (replicates == 0) throw std::invalid_argument("connectivity_profile: replicates must be >= 1");
  std::vector<std::size_t> targets;
  for (const auto& k : offsets) {
    const auto t = lattice.translate(lattice.origin(), k);
    if (!t) throw std::invalid_argument("connectivity_profile: offset outside the box");
    targets.push_back(*t);
  }
  std::vector<std::vector<char>> hit(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    const auto lab = label_clusters(sample_config(lattice, p, replicate_seed(seed, r), "graph"),
                                    ProxyRule::Disabled);
    auto& h = hit[r];
    h.resize(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
      h[i] = lab.cluster_id[targets[i]] == lab.cluster_id[lattice.origin()];
  });
  std::vector<ConnectivityEstimate> out;
  const double n = static_cast<double>(replicates);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::size_t count = 0;
    for (const auto& h : hit) count += h[i];
    const double q = static_cast<double>(count) / n;
    out.push_back({offsets[i], q, replicates > 1 ? std::sqrt(q * (1 - q) / (n - 1)) : 0.0});
  }
  return out;
}

}  // namespace dac
