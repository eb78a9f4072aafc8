#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dac {

/// Moments of a sample with standard errors.
///
/// variance is the unbiased estimator. skewness and excess_kurtosis are the
/// adjusted estimators G1 and G2 (they fall back to the plain moment ratios
/// below four samples) and are NaN with shape_defined == false when the
/// sample has zero spread. Standard errors come from the empirical influence
/// functions of the plug-in estimators, so they remain valid for
/// non-Gaussian data.
struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = std::numeric_limits<double>::quiet_NaN();
  double excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
  double se_mean = std::numeric_limits<double>::quiet_NaN();
  double se_variance = std::numeric_limits<double>::quiet_NaN();
  double se_excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
  bool shape_defined = false;
};

namespace detail {

inline double adjusted_skewness(double n, double m2, double m3) {
  const double g1 = m3 / std::pow(m2, 1.5);
  if (n < 3) return g1;
  return g1 * std::sqrt(n * (n - 1)) / (n - 2);
}

inline double adjusted_excess_kurtosis(double n, double m2, double m4) {
  const double g2 = m4 / (m2 * m2) - 3.0;
  if (n < 4) return g2;
  return ((n + 1) * g2 + 6) * (n - 1) / ((n - 2) * (n - 3));
}

}  // namespace detail

inline SampleSummary summarize(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("summarize: empty sample");
  SampleSummary s;
  s.count = xs.size();
  const double n = static_cast<double>(xs.size());

  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double corr = 0.0;
  for (double x : xs) corr += x - mean;
  mean += corr / n;

  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const double m2 = s2 / n, m3 = s3 / n, m4 = s4 / n;
  s.mean = mean;
  s.variance = xs.size() > 1 ? s2 / (n - 1) : 0.0;
  if (xs.size() > 1) {
    s.se_mean = std::sqrt(s.variance / n);
    s.se_variance = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  }
  if (m2 > 0.0) {
    s.shape_defined = true;
    s.skewness = detail::adjusted_skewness(n, m2, m3);
    s.excess_kurtosis = detail::adjusted_excess_kurtosis(n, m2, m4);
    if (xs.size() > 1) {
      const double m2sq = m2 * m2;
      double acc = 0.0;
      for (double x : xs) {
        const double d = x - mean;
        const double d2 = d * d;
        const double infl =
            (d2 * d2 - m4 - 4.0 * m3 * d) / m2sq - 2.0 * m4 * (d2 - m2) / (m2sq * m2);
        acc += infl * infl;
      }
      s.se_excess_kurtosis = std::sqrt(acc) / n;
    }
  }
  return s;
}

/// Streaming moments up to fourth order (Terriberry's update).
class OnlineMoments {
 public:
  void push(double x) noexcept {
    const double n1 = static_cast<double>(n_);
    ++n_;
    const double n = static_cast<double>(n_);
    const double delta = x - mean_;
    const double dn = delta / n;
    const double dn2 = dn * dn;
    const double term1 = delta * dn * n1;
    mean_ += dn;
    m4_ += term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * m2_ - 4 * dn * m3_;
    m3_ += term1 * dn * (n - 2) - 3 * dn * m2_;
    m2_ += term1;
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double skewness() const noexcept {
    const double n = static_cast<double>(n_);
    return detail::adjusted_skewness(n, m2_ / n, m3_ / n);
  }
  double excess_kurtosis() const noexcept {
    const double n = static_cast<double>(n_);
    return detail::adjusted_excess_kurtosis(n, m2_ / n, m4_ / n);
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

/// Outcome of a goodness-of-fit test. `prediction` names the law or value
/// the test was run against.
struct TestReport {
  std::string name;
  std::string prediction;
  double statistic = 0.0;
  double p_value = 1.0;
  double level = 0.01;
  bool passed = true;
};

inline double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Kolmogorov survival function Q(lambda) = P(K > lambda).
inline double kolmogorov_q(double lambda) noexcept {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  double q;
  if (lambda < 1.18) {
    const double y = -pi2 / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int j = 1; j <= 16; j += 2) sum += std::exp(static_cast<double>(j * j) * y);
    q = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
  } else {
    q = 0.0;
    for (int j = 1; j <= 100; ++j) {
      const double term = std::exp(-2.0 * j * j * lambda * lambda);
      q += (j % 2 ? 2.0 : -2.0) * term;
      if (term < 1e-300) break;
    }
  }
  return std::clamp(q, 0.0, 1.0);
}

namespace detail {

inline double ks_p_value(double effective_n, double d) noexcept {
  const double en = std::sqrt(effective_n);
  return kolmogorov_q((en + 0.12 + 0.11 / en) * d);
}

}  // namespace detail

inline TestReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                                double level = 0.01) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  TestReport r;
  r.name = "ks_two_sample";
  r.statistic = d;
  r.p_value = detail::ks_p_value(na * nb / (na + nb), d);
  r.level = level;
  r.passed = r.p_value >= level;
  return r;
}

/// One-sample KS against an arbitrary continuous CDF.
inline TestReport ks_one_sample(std::span<const double> samples,
                                const std::function<double(double)>& cdf,
                                double level = 0.01) {
  if (samples.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  TestReport r;
  r.name = "ks_one_sample";
  r.statistic = d;
  r.p_value = detail::ks_p_value(n, d);
  r.level = level;
  r.passed = r.p_value >= level;
  return r;
}

inline TestReport ks_one_sample_gaussian(std::span<const double> samples, double mean,
                                         double variance, double level = 0.01) {
  if (!(variance > 0.0))
    throw std::invalid_argument("ks_one_sample_gaussian: variance must be > 0");
  const double sd = std::sqrt(variance);
  auto r = ks_one_sample(
      samples, [=](double x) { return normal_cdf((x - mean) / sd); }, level);
  r.name = "ks_one_sample_gaussian";
  return r;
}

struct Atom {
  double value;
  double weight;
};

/// Empirical law of a sample: distinct values with relative frequencies.
inline std::vector<Atom> empirical_law(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  std::vector<Atom> out;
  const double w = 1.0 / static_cast<double>(v.size());
  for (double x : v) {
    if (!out.empty() && out.back().value == x)
      out.back().weight += w;
    else
      out.push_back({x, w});
  }
  return out;
}

/// Empirical mass assigned to each law atom by nearest-atom binning.
struct AtomBinning {
  std::vector<double> mass;      // per law atom
  std::vector<double> centroid;  // mass-weighted mean of the values binned there; NaN if none
  double unassigned = 0.0;
};

inline double default_bin_tolerance(std::span<const Atom> law) {
  double scale = 0.0;
  for (const auto& a : law) scale = std::max(scale, std::abs(a.value));
  return 1e-9 * scale;
}

inline AtomBinning bin_to_atoms(std::span<const Atom> empirical, std::span<const Atom> law,
                                double tolerance) {
  if (law.empty()) throw std::invalid_argument("bin_to_atoms: law has no atoms");
  for (std::size_t i = 0; i < law.size(); ++i)
    for (std::size_t j = i + 1; j < law.size(); ++j)
      if (std::abs(law[i].value - law[j].value) <= 2.0 * tolerance)
        throw std::invalid_argument("bin_to_atoms: law atoms overlap at this tolerance");
  AtomBinning b;
  b.mass.assign(law.size(), 0.0);
  std::vector<double> moment(law.size(), 0.0);
  for (const auto& e : empirical) {
    std::size_t best = 0;
    double best_dist = std::abs(e.value - law[0].value);
    for (std::size_t k = 1; k < law.size(); ++k) {
      const double dist = std::abs(e.value - law[k].value);
      if (dist < best_dist) best = k, best_dist = dist;
    }
    if (best_dist <= tolerance) {
      b.mass[best] += e.weight;
      moment[best] += e.weight * e.value;
    } else {
      b.unassigned += e.weight;
    }
  }
  b.centroid.resize(law.size());
  for (std::size_t k = 0; k < law.size(); ++k)
    b.centroid[k] = b.mass[k] > 0 ? moment[k] / b.mass[k]
                                  : std::numeric_limits<double>::quiet_NaN();
  return b;
}

/// Total-variation distance between an empirical law and a discrete law,
/// after binning empirical values onto the law's atoms. Mass that lands on
/// no atom counts fully.
inline double tv_distance_discrete(std::span<const Atom> empirical, std::span<const Atom> law,
                                   double tolerance) {
  const auto b = bin_to_atoms(empirical, law, tolerance);
  double sum = b.unassigned;
  for (std::size_t k = 0; k < law.size(); ++k) sum += std::abs(b.mass[k] - law[k].weight);
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

inline double tv_distance_discrete(std::span<const Atom> empirical, std::span<const Atom> law) {
  return tv_distance_discrete(empirical, law, default_bin_tolerance(law));
}

}  // namespace dac
