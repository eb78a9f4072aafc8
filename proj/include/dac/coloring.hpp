#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <type_traits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dac/percolation.hpp"
#include "dac/rng.hpp"
#include "dac/stats.hpp"

namespace dac {

/// (1 - alpha) delta_a + alpha delta_b.
struct TwoPoint {
  double a = -1.0;
  double b = 1.0;
  double alpha = 0.5;
};

struct GaussianLaw {
  double mean = 0.0;
  double variance = 1.0;
};

struct FiniteDiscrete {
  std::vector<Atom> atoms;
};

/// (2k-1)!! = (2k)! / (k! 2^k). Exact integer arithmetic up to k = 10,
/// log-gamma above.
inline double double_factorial_odd(int k) {
  if (k < 0) throw std::invalid_argument("double_factorial_odd: k must be >= 0");
  if (k <= 10) {
    std::uint64_t r = 1;
    for (std::uint64_t j = 3; j < 2 * static_cast<std::uint64_t>(k); j += 2) r *= j;
    return static_cast<double>(r);
  }
  return std::exp(std::lgamma(2.0 * k + 1) - std::lgamma(k + 1.0) - k * std::log(2.0));
}

/// Color law painted independently on each cluster.
class ColorMeasure {
 public:
  using Variant = std::variant<TwoPoint, GaussianLaw, FiniteDiscrete>;

  ColorMeasure() : ColorMeasure(TwoPoint{}) {}
  ColorMeasure(TwoPoint t) : law_(t) {
    if (!(t.alpha >= 0.0 && t.alpha <= 1.0))
      throw std::invalid_argument("two-point: alpha must lie in [0, 1]");
    if (!std::isfinite(t.a) || !std::isfinite(t.b))
      throw std::invalid_argument("two-point: atoms must be finite");
  }
  ColorMeasure(GaussianLaw g) : law_(g) {
    if (!(g.variance >= 0.0) || !std::isfinite(g.mean) || !std::isfinite(g.variance))
      throw std::invalid_argument("gaussian: variance must be finite and >= 0");
  }
  ColorMeasure(FiniteDiscrete d) : law_(std::move(d)) {
    const auto& atoms = std::get<FiniteDiscrete>(law_).atoms;
    if (atoms.empty()) throw std::invalid_argument("discrete: no atoms");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!(a.weight >= 0.0) || !std::isfinite(a.value))
        throw std::invalid_argument("discrete: weights must be >= 0 and values finite");
      total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("discrete: weights must sum to 1");
  }

  static ColorMeasure point_mass(double c) { return FiniteDiscrete{{{c, 1.0}}}; }

  const Variant& variant() const noexcept { return law_; }

  double mean() const {
    return std::visit(
        [](const auto& l) -> double {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, TwoPoint>) {
            if (l.a == l.b || l.alpha == 0.0) return l.a;
            if (l.alpha == 1.0) return l.b;
            return (1 - l.alpha) * l.a + l.alpha * l.b;
          } else if constexpr (std::is_same_v<T, GaussianLaw>) {
            return l.mean;
          } else {
            if (l.atoms.size() == 1) return l.atoms[0].value;
            double m = 0.0;
            for (const auto& a : l.atoms) m += a.weight * a.value;
            return m;
          }
        },
        law_);
  }

  /// Integral of (z - m)^order. Odd orders vanish for the Gaussian.
  double central_moment(int order) const {
    if (order < 0) throw std::invalid_argument("central_moment: order must be >= 0");
    if (order == 0) return 1.0;
    const double m = mean();
    return std::visit(
        [&](const auto& l) -> double {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, TwoPoint>) {
            if (l.a == l.b) return 0.0;
            return (1 - l.alpha) * std::pow(l.a - m, order) + l.alpha * std::pow(l.b - m, order);
          } else if constexpr (std::is_same_v<T, GaussianLaw>) {
            if (order % 2) return 0.0;
            return double_factorial_odd(order / 2) * std::pow(l.variance, order / 2);
          } else {
            double s = 0.0;
            for (const auto& a : l.atoms) s += a.weight * std::pow(a.value - m, order);
            return s;
          }
        },
        law_);
  }

  double variance() const {
    if (const auto* t = std::get_if<TwoPoint>(&law_))
      return t->alpha * (1 - t->alpha) * (t->b - t->a) * (t->b - t->a);
    return central_moment(2);
  }

  /// Atoms with positive weight, for the discrete variants.
  std::optional<std::vector<Atom>> support() const {
    if (const auto* t = std::get_if<TwoPoint>(&law_)) {
      std::vector<Atom> s;
      if (t->a == t->b) return std::vector<Atom>{{t->a, 1.0}};
      if (t->alpha < 1.0) s.push_back({t->a, 1 - t->alpha});
      if (t->alpha > 0.0) s.push_back({t->b, t->alpha});
      return s;
    }
    if (const auto* d = std::get_if<FiniteDiscrete>(&law_)) {
      std::vector<Atom> s;
      for (const auto& a : d->atoms)
        if (a.weight > 0.0) s.push_back(a);
      return s;
    }
    return std::nullopt;
  }

  bool is_discrete() const noexcept { return !std::holds_alternative<GaussianLaw>(law_); }

  bool is_point_mass() const {
    if (const auto* g = std::get_if<GaussianLaw>(&law_)) return g->variance == 0.0;
    const auto s = support();
    for (const auto& a : *s)
      if (a.value != s->front().value) return false;
    return true;
  }

  double sample(Rng& rng) const {
    return std::visit(
        [&](const auto& l) -> double {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, TwoPoint>) {
            return rng.uniform() < l.alpha ? l.b : l.a;
          } else if constexpr (std::is_same_v<T, GaussianLaw>) {
            return l.mean + std::sqrt(l.variance) * rng.normal();
          } else {
            const double u = rng.uniform();
            double cum = 0.0;
            for (std::size_t i = 0; i + 1 < l.atoms.size(); ++i) {
              cum += l.atoms[i].weight;
              if (u < cum) return l.atoms[i].value;
            }
            return l.atoms.back().value;
          }
        },
        law_);
  }

  /// The law of z + c.
  ColorMeasure shifted(double c) const {
    return std::visit(
        [&](const auto& l) -> ColorMeasure {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, TwoPoint>) {
            return TwoPoint{l.a + c, l.b + c, l.alpha};
          } else if constexpr (std::is_same_v<T, GaussianLaw>) {
            return GaussianLaw{l.mean + c, l.variance};
          } else {
            FiniteDiscrete d = l;
            for (auto& a : d.atoms) a.value += c;
            return d;
          }
        },
        law_);
  }

  /// Text form accepted by parse_color_measure().
  std::string to_string() const {
    auto num = [](double x) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, x);
      return std::string(buf, res.ptr);
    };
    return std::visit(
        [&](const auto& l) -> std::string {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, TwoPoint>) {
            return "two-point:" + num(l.a) + "," + num(l.b) + "," + num(l.alpha);
          } else if constexpr (std::is_same_v<T, GaussianLaw>) {
            return "gaussian:" + num(l.mean) + "," + num(l.variance);
          } else {
            std::string s = "discrete:";
            for (std::size_t i = 0; i < l.atoms.size(); ++i) {
              if (i) s += ",";
              s += num(l.atoms[i].value) + ":" + num(l.atoms[i].weight);
            }
            return s;
          }
        },
        law_);
  }

 private:
  Variant law_;
};

struct ColorMoments {
  double m = 0.0;
  double sigma2 = 0.0;
};

inline ColorMoments moments(const ColorMeasure& nu) { return {nu.mean(), nu.variance()}; }

/// Integral of (z - m)^(2k) d nu.
inline double central_even_moment(const ColorMeasure& nu, int k) {
  return nu.central_moment(2 * k);
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline double parse_double(std::string_view s, std::string_view spec) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("malformed color measure '" + std::string(spec) +
                                "': bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Parses "two-point:a,b,alpha", "gaussian:mean,var" or
/// "discrete:v1:w1,v2:w2,...".
inline ColorMeasure parse_color_measure(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("malformed color measure '" + std::string(spec) +
                                "': expected <kind>:<parameters>");
  const auto kind = spec.substr(0, colon);
  const auto fields = detail::split(spec.substr(colon + 1), ',');
  auto num = [&](std::string_view s) { return detail::parse_double(s, spec); };
  auto arity = [&](std::size_t n) {
    if (fields.size() != n)
      throw std::invalid_argument("malformed color measure '" + std::string(spec) + "': expected " +
                                  std::to_string(n) + " parameters");
  };
  if (kind == "two-point") {
    arity(3);
    return TwoPoint{num(fields[0]), num(fields[1]), num(fields[2])};
  }
  if (kind == "gaussian") {
    arity(2);
    return GaussianLaw{num(fields[0]), num(fields[1])};
  }
  if (kind == "discrete") {
    FiniteDiscrete d;
    for (auto f : fields) {
      const auto parts = detail::split(f, ':');
      if (parts.size() != 2)
        throw std::invalid_argument("malformed color measure '" + std::string(spec) +
                                    "': discrete atoms are value:weight");
      d.atoms.push_back({num(parts[0]), num(parts[1])});
    }
    return d;
  }
  throw std::invalid_argument("malformed color measure '" + std::string(spec) +
                              "': unknown kind '" + std::string(kind) + "'");
}

/// Colors of one labeling, stored per cluster. Keeps a reference to the
/// labeling, which must outlive the field.
class ColorField {
 public:
  ColorField(const ClusterLabeling& labeling, std::vector<double> cluster_color)
      : labeling_(&labeling), cluster_color_(std::move(cluster_color)) {
    if (cluster_color_.size() != labeling.k_n)
      throw std::invalid_argument("ColorField: one color per cluster required");
    if (labeling.infinite_proxy) z_ = cluster_color_[*labeling.infinite_proxy];
  }

  double operator()(std::size_t site) const noexcept {
    return cluster_color_[labeling_->cluster_id[site]];
  }

  /// Color of the infinite-cluster proxy, 0 when there is none.
  double Z() const noexcept { return z_; }

  const ClusterLabeling& labeling() const noexcept { return *labeling_; }
  std::span<const double> cluster_colors() const noexcept { return cluster_color_; }

 private:
  const ClusterLabeling* labeling_;
  std::vector<double> cluster_color_;
  double z_ = 0.0;
};

/// One independent draw from nu per cluster, in cluster-id order (that is,
/// by smallest site index), from the (seed, tag) stream.
inline ColorField color_clusters(const ClusterLabeling& labeling, const ColorMeasure& nu,
                                 std::uint64_t seed, std::string_view stream_tag = "color") {
  Rng rng(seed, stream_tag);
  std::vector<double> colors(labeling.k_n);
  for (auto& c : colors) c = nu.sample(rng);
  return ColorField(labeling, std::move(colors));
}

inline double field_mean(const ColorField& field, std::span<const std::size_t> window) {
  if (window.empty()) throw std::invalid_argument("field_mean: empty window");
  // Accumulate deviations from the first value so constant fields are exact.
  const double base = field(window.front());
  double s = 0.0;
  for (std::size_t x : window) s += field(x) - base;
  return base + s / static_cast<double>(window.size());
}

}  // namespace dac
