#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dac/coloring.hpp"
#include "dac/rng.hpp"
#include "dac/stats.hpp"

namespace dac {

struct PointMass {
  double value = 0.0;
};

/// `first` and `second` are (value, probability) pairs.
struct TwoPointLaw {
  Atom first;
  Atom second;
};

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 0.0;
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;
};

/// Law of offset + color_scale * z + x + y * (z - m), with x ~ N(0, x_variance),
/// y ~ N(0, y_variance), z ~ nu independent and m the mean of nu. Covers
/// (1 - theta) m + theta Z and the annealed CLT limit.
struct SampledLaw {
  double offset = 0.0;
  double color_scale = 0.0;
  double x_variance = 0.0;
  double y_variance = 0.0;
  ColorMeasure nu;
};

using LimitLaw = std::variant<PointMass, GaussianLaw, TwoPointLaw, GaussianMixture, SampledLaw>;

enum class Regime { Subcritical, Supercritical };

inline std::string_view to_string(Regime r) noexcept {
  return r == Regime::Subcritical ? "subcritical" : "supercritical";
}

inline Regime parse_regime(std::string_view s) {
  if (s == "subcritical") return Regime::Subcritical;
  if (s == "supercritical") return Regime::Supercritical;
  throw std::invalid_argument("unknown regime '" + std::string(s) +
                              "' (expected subcritical or supercritical)");
}

namespace detail {

inline void require_probability(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

inline std::string describe(const LimitLaw& law) {
  using detail::fmt;
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return "delta(" + fmt(l.value) + ")";
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          return "N(" + fmt(l.mean) + ", " + fmt(l.variance) + ")";
        } else if constexpr (std::is_same_v<T, TwoPointLaw>) {
          return fmt(l.first.weight) + " delta(" + fmt(l.first.value) + ") + " +
                 fmt(l.second.weight) + " delta(" + fmt(l.second.value) + ")";
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          std::string s;
          for (const auto& c : l.components) {
            if (!s.empty()) s += " + ";
            s += fmt(c.weight) + " N(" + fmt(c.mean) + ", " + fmt(c.variance) + ")";
          }
          return s;
        } else {
          return "law of " + fmt(l.offset) + " + " + fmt(l.color_scale) + " z + N(0, " +
                 fmt(l.x_variance) + ") + N(0, " + fmt(l.y_variance) + ") (z - m), z ~ " +
                 l.nu.to_string();
        }
      },
      law);
}

inline double law_mean(const LimitLaw& law) {
  return std::visit(
      [](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return l.value;
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          return l.mean;
        } else if constexpr (std::is_same_v<T, TwoPointLaw>) {
          return l.first.weight * l.first.value + l.second.weight * l.second.value;
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          double m = 0.0;
          for (const auto& c : l.components) m += c.weight * c.mean;
          return m;
        } else {
          return l.offset + l.color_scale * l.nu.mean();
        }
      },
      law);
}

inline double law_variance(const LimitLaw& law) {
  const double mu = law_mean(law);
  return std::visit(
      [mu](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          return l.variance;
        } else if constexpr (std::is_same_v<T, TwoPointLaw>) {
          const double d = l.first.value - l.second.value;
          return l.first.weight * l.second.weight * d * d;
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          double v = 0.0;
          for (const auto& c : l.components) v += c.weight * (c.variance + (c.mean - mu) * (c.mean - mu));
          return v;
        } else {
          const double s2 = l.nu.variance();
          return l.color_scale * l.color_scale * s2 + l.x_variance + l.y_variance * s2;
        }
      },
      law);
}

/// Excess kurtosis of a Gaussian mixture.
inline double mixture_excess_kurtosis(const GaussianMixture& mix) {
  const double mu = law_mean(mix);
  double m2 = 0.0, m4 = 0.0;
  for (const auto& c : mix.components) {
    const double d = c.mean - mu, d2 = d * d;
    m2 += c.weight * (c.variance + d2);
    m4 += c.weight * (d2 * d2 + 6 * d2 * c.variance + 3 * c.variance * c.variance);
  }
  return m4 / (m2 * m2) - 3.0;
}

/// CDF of the closed-form variants. SampledLaw has none.
inline double law_cdf(const LimitLaw& law, double x) {
  auto gauss = [](double x, double mean, double var) {
    if (var == 0.0) return x >= mean ? 1.0 : 0.0;
    return normal_cdf((x - mean) / std::sqrt(var));
  };
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return x >= l.value ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          return gauss(x, l.mean, l.variance);
        } else if constexpr (std::is_same_v<T, TwoPointLaw>) {
          return (x >= l.first.value ? l.first.weight : 0.0) +
                 (x >= l.second.value ? l.second.weight : 0.0);
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          double f = 0.0;
          for (const auto& c : l.components) f += c.weight * gauss(x, c.mean, c.variance);
          return f;
        } else {
          throw std::logic_error("law_cdf: no closed form for a sampled law");
        }
      },
      law);
}

/// Atoms of PointMass and TwoPointLaw; empty for the continuous variants.
inline std::optional<std::vector<Atom>> law_atoms(const LimitLaw& law) {
  if (const auto* p = std::get_if<PointMass>(&law)) return std::vector<Atom>{{p->value, 1.0}};
  if (const auto* t = std::get_if<TwoPointLaw>(&law)) return std::vector<Atom>{t->first, t->second};
  return std::nullopt;
}

inline double sample(const LimitLaw& law, Rng& rng) {
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return l.value;
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          return l.mean + std::sqrt(l.variance) * rng.normal();
        } else if constexpr (std::is_same_v<T, TwoPointLaw>) {
          return rng.uniform() < l.first.weight ? l.first.value : l.second.value;
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          const double u = rng.uniform();
          const double g = rng.normal();
          double cum = 0.0;
          for (std::size_t i = 0; i + 1 < l.components.size(); ++i) {
            cum += l.components[i].weight;
            if (u < cum) return l.components[i].mean + std::sqrt(l.components[i].variance) * g;
          }
          const auto& c = l.components.back();
          return c.mean + std::sqrt(c.variance) * g;
        } else {
          const double z = l.nu.sample(rng);
          const double x = std::sqrt(l.x_variance) * rng.normal();
          const double y = std::sqrt(l.y_variance) * rng.normal();
          return l.offset + l.color_scale * z + x + y * (z - l.nu.mean());
        }
      },
      law);
}

/// `count` draws from the (seed, "gamma-sampler") stream.
inline std::vector<double> sample_law(const LimitLaw& law, std::size_t count, std::uint64_t seed) {
  Rng rng(seed, "gamma-sampler");
  std::vector<double> out(count);
  for (auto& v : out) v = sample(law, rng);
  return out;
}

/// Law of (1 - theta) m + theta Z with Z ~ nu.
inline LimitLaw lln_limit_law(const ColorMeasure& nu, double theta) {
  detail::require_probability(theta, "lln_limit_law: theta");
  const double m = nu.mean();
  if (theta == 0.0 || nu.is_point_mass()) return PointMass{m};
  if (const auto* t = std::get_if<TwoPoint>(&nu.variant())) {
    const double base = (1 - theta) * m;
    return TwoPointLaw{{base + theta * t->b, t->alpha}, {base + theta * t->a, 1 - t->alpha}};
  }
  if (const auto* g = std::get_if<GaussianLaw>(&nu.variant()))
    return GaussianLaw{m, theta * theta * g->variance};
  return SampledLaw{(1 - theta) * m, theta, 0.0, 0.0, nu};
}

/// Limit magnetization for nu = (1 - alpha) delta_{-1} + alpha delta_{+1}.
inline LimitLaw two_point_magnetization(double alpha, double theta) {
  detail::require_probability(alpha, "two_point_magnetization: alpha");
  detail::require_probability(theta, "two_point_magnetization: theta");
  const double up = 2 * alpha * (1 - theta) + 2 * theta - 1;  // probability alpha
  const double down = 2 * alpha * (1 - theta) - 1;            // probability 1 - alpha
  if (theta == 0.0 || alpha == 1.0) return PointMass{up};
  if (alpha == 0.0) return PointMass{down};
  return TwoPointLaw{{up, alpha}, {down, 1 - alpha}};
}

/// True iff max(alpha, 1 - alpha) (1 - theta) >= 1/2.
inline bool sign_deterministic(double alpha, double theta) {
  detail::require_probability(alpha, "sign_deterministic: alpha");
  detail::require_probability(theta, "sign_deterministic: theta");
  return std::max(alpha, 1 - alpha) * (1 - theta) >= 0.5;
}

namespace detail {

inline void require_nonnegative(double chi_f, double sigma2, double sigma_p2) {
  if (!(chi_f >= 0.0) || !(sigma2 >= 0.0) || !(sigma_p2 >= 0.0))
    throw std::invalid_argument("gamma_law: chi_f, sigma2 and sigma_p2 must be >= 0");
}

inline LimitLaw centered_gaussian(double variance) {
  if (variance == 0.0) return PointMass{0.0};
  return GaussianLaw{0.0, variance};
}

}  // namespace detail

/// Mixture form of the supercritical annealed CLT law for discrete nu:
/// one N(0, chi_f sigma2 + (z_i - m)^2 sigma_p2) per atom z_i.
inline std::optional<GaussianMixture> gamma_mixture(double chi_f, double sigma2, double sigma_p2,
                                                    const ColorMeasure& nu) {
  detail::require_nonnegative(chi_f, sigma2, sigma_p2);
  const auto atoms = nu.support();
  if (!atoms) return std::nullopt;
  const double m = nu.mean();
  GaussianMixture mix;
  for (const auto& a : *atoms)
    mix.components.push_back(
        {a.weight, 0.0, chi_f * sigma2 + (a.value - m) * (a.value - m) * sigma_p2});
  return mix;
}

/// Sampler for the annealed CLT limit law.
inline SampledLaw gamma_sampler(Regime regime, double chi_f, double sigma2, double sigma_p2,
                                const ColorMeasure& nu) {
  detail::require_nonnegative(chi_f, sigma2, sigma_p2);
  return SampledLaw{0.0, 0.0, chi_f * sigma2,
                    regime == Regime::Supercritical ? sigma_p2 : 0.0, nu};
}

/// Closed form of the annealed CLT limit law where one exists: Gaussian when
/// subcritical, or supercritical with all mixture variances equal; a
/// Gaussian mixture for other discrete nu; otherwise the sampler.
inline LimitLaw gamma_law(Regime regime, double chi_f, double sigma2, double sigma_p2,
                          const ColorMeasure& nu) {
  detail::require_nonnegative(chi_f, sigma2, sigma_p2);
  if (regime == Regime::Subcritical) return detail::centered_gaussian(chi_f * sigma2);
  auto mix = gamma_mixture(chi_f, sigma2, sigma_p2, nu);
  if (!mix) return gamma_sampler(regime, chi_f, sigma2, sigma_p2, nu);

  GaussianMixture merged;
  for (const auto& c : mix->components) {
    auto it = std::find_if(merged.components.begin(), merged.components.end(),
                           [&](const auto& k) { return detail::nearly_equal(k.variance, c.variance); });
    if (it == merged.components.end())
      merged.components.push_back(c);
    else
      it->weight += c.weight;
  }
  if (merged.components.size() == 1) return detail::centered_gaussian(merged.components[0].variance);
  return merged;
}

/// True iff the supercritical annealed CLT law is Gaussian, which happens
/// exactly when nu = (delta_a + delta_b) / 2 (a = b allowed).
inline bool is_gamma_gaussian(const ColorMeasure& nu) {
  if (nu.is_point_mass()) return true;
  const auto atoms = nu.support();
  if (!atoms) return false;
  std::vector<Atom> distinct;
  for (const auto& a : *atoms) {
    auto it = std::find_if(distinct.begin(), distinct.end(),
                           [&](const Atom& d) { return d.value == a.value; });
    if (it == distinct.end())
      distinct.push_back(a);
    else
      it->weight += a.weight;
  }
  return distinct.size() == 2 && std::abs(distinct[0].weight - 0.5) <= 1e-12 &&
         std::abs(distinct[1].weight - 0.5) <= 1e-12;
}

/// 2k-th moment of the scale mixture of N(0, (z - m)^2 sigma_p2) over z ~ nu:
/// (2k)! / (k! 2^k) * integral (z - m)^(2k) d nu * sigma_p2^k.
inline double gamma_prime_moment(int k, const ColorMeasure& nu, double sigma_p2) {
  if (k < 1) throw std::invalid_argument("gamma_prime_moment: k must be >= 1");
  if (!(sigma_p2 >= 0.0)) throw std::invalid_argument("gamma_prime_moment: sigma_p2 must be >= 0");
  return double_factorial_odd(k) * central_even_moment(nu, k) * std::pow(sigma_p2, k);
}

inline SampledLaw gamma_prime_sampler(const ColorMeasure& nu, double sigma_p2) {
  return SampledLaw{0.0, 0.0, 0.0, sigma_p2, nu};
}

/// Annealed Cov(X_0, X_k) = sigma2 * P(k in C(0)).
inline double covariance_prediction(double sigma2, double connect_prob) {
  detail::require_probability(connect_prob, "covariance_prediction: connect_prob");
  return sigma2 * connect_prob;
}

}  // namespace dac
