#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dac/harness.hpp"
#include "dac/percolation.hpp"
#include "dac/stats.hpp"
#include "dac/theory.hpp"

namespace dac::report {

using json = nlohmann::ordered_json;

inline const char* stream_derivation() {
  return "stream = mix64(replicate_seed(master_seed, index) ^ mix64(fnv1a(role)))";
}

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["dim"] = c.dim;
  j["radii"] = c.radii;
  j["p"] = c.p;
  j["nu"] = c.nu.to_string();
  j["mode"] = std::string(to_string(c.mode));
  j["graph_replicates"] = c.graph_replicates;
  j["color_replicates"] = c.color_replicates;
  j["margin"] = c.margin ? json(*c.margin) : json(nullptr);
  j["proxy"] = c.proxy_rule ? json(std::string(to_string(*c.proxy_rule))) : json(nullptr);
  j["regime"] = c.regime ? json(std::string(to_string(*c.regime))) : json(nullptr);
  j["level"] = c.level;
  j["lln_tolerance"] = c.lln_tolerance;
  j["tv_threshold"] = c.tv_threshold;
  j["atom_tolerance"] = c.atom_tolerance;
  j["exact_variance_tolerance"] = c.exact_variance_tolerance;
  j["asymptotic_variance_tolerance"] = c.asymptotic_variance_tolerance;
  j["condition_ratio_tolerance"] = c.condition_ratio_tolerance;
  j["sampler_draws"] = c.sampler_draws;
  j["reference_sigma_p2"] = c.reference_sigma_p2 ? json(*c.reference_sigma_p2) : json(nullptr);
  return j;
}

inline json to_json(const PercolationEstimates& e) {
  return json{{"theta_hat", e.theta_hat},
              {"theta_se", e.theta_se},
              {"chi_f_hat", e.chi_f_hat},
              {"chi_f_se", e.chi_f_se},
              {"kappa_hat", e.kappa_hat},
              {"kappa_se", e.kappa_se},
              {"sigma_p2_hat", e.sigma_p2_hat},
              {"sigma_p2_se", e.sigma_p2_se},
              {"square_sum_density", e.square_sum_density},
              {"square_sum_density_se", e.square_sum_density_se},
              {"replicates", e.replicates},
              {"margin", e.margin},
              {"window_size", e.window_size},
              {"proxy", std::string(to_string(e.proxy_rule))}};
}

inline json to_json(const LimitLaw& law) {
  json j = std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return {{"kind", "point-mass"}, {"value", l.value}};
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          return {{"kind", "gaussian"}, {"mean", l.mean}, {"variance", l.variance}};
        } else if constexpr (std::is_same_v<T, TwoPointLaw>) {
          return {{"kind", "two-point"},
                  {"atoms", json::array({json{{"value", l.first.value}, {"probability", l.first.weight}},
                                         json{{"value", l.second.value}, {"probability", l.second.weight}}})}};
        } else if constexpr (std::is_same_v<T, GaussianMixture>) {
          json comps = json::array();
          for (const auto& c : l.components)
            comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
          return {{"kind", "gaussian-mixture"}, {"components", comps}};
        } else {
          return {{"kind", "sampled"},
                  {"offset", l.offset},
                  {"color_scale", l.color_scale},
                  {"x_variance", l.x_variance},
                  {"y_variance", l.y_variance},
                  {"nu", l.nu.to_string()}};
        }
      },
      law);
  j["description"] = describe(law);
  return j;
}

inline json to_json(const TestReport& t) {
  return {{"name", t.name},     {"prediction", t.prediction}, {"statistic", t.statistic},
          {"p_value", t.p_value}, {"level", t.level},         {"passed", t.passed}};
}

inline json to_json(const ToleranceCheck& c) {
  return {{"name", c.name},         {"prediction", c.prediction}, {"observed", c.observed},
          {"expected", c.expected}, {"deviation", c.deviation},   {"tolerance", c.tolerance},
          {"passed", c.passed}};
}

inline json to_json(const SampleSummary& s) {
  return {{"count", s.count},
          {"mean", s.mean},
          {"variance", s.variance},
          {"skewness", s.skewness},
          {"excess_kurtosis", s.excess_kurtosis},
          {"se_mean", s.se_mean},
          {"se_variance", s.se_variance},
          {"se_excess_kurtosis", s.se_excess_kurtosis}};
}

/// Report skeleton with every schema key present.
inline json empty_report(const std::string& experiment) {
  json j;
  j["experiment"] = experiment;
  j["config"] = json::object();
  j["estimates"] = json::object();
  j["predictions"] = json::object();
  j["tests"] = json{{"hypothesis", json::array()}, {"tolerance", json::array()}};
  j["seeds"] = json::object();
  j["timing"] = json::object();
  j["passed"] = true;
  return j;
}

inline json seeds_json(std::uint64_t master, const std::vector<std::string>& roles) {
  return {{"master_seed", master}, {"derivation", stream_derivation()}, {"roles", roles}};
}

/// Serializes a run. Timing (wall clock and worker count) is the only part
/// that may differ between runs of the same config.
inline json run_report(const RunResult& r, bool include_timing = true) {
  json j = empty_report(r.experiment);
  j["config"] = to_json(r.config);
  if (r.estimates) j["estimates"] = to_json(*r.estimates);
  for (const auto& p : r.predictions) j["predictions"][p.name] = to_json(p.law);
  for (const auto& t : r.tests) j["tests"]["hypothesis"].push_back(to_json(t));
  for (const auto& c : r.checks) j["tests"]["tolerance"].push_back(to_json(c));
  j["seeds"] = seeds_json(r.config.master_seed, r.stream_tags);
  if (include_timing) j["timing"] = {{"wall_seconds", r.wall_seconds}, {"workers", r.config.workers}};
  j["passed"] = r.passed();
  j["statistic"] = r.statistic_name;
  j["window"] = {{"margin", r.window_margin}, {"size", r.window_size}};
  j["replicates"] = r.records.size();
  const auto stats = r.statistics();
  j["summary"] = stats.empty() || std::isnan(stats.front()) ? json(nullptr) : to_json(summarize(stats));
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = v;
  j["metrics"] = metrics;
  if (!r.trajectory.empty()) {
    json traj = json::array();
    for (const auto& t : r.trajectory)
      traj.push_back({{"radius", t.radius}, {"window_size", t.window_size}, {"magnetization", t.magnetization}});
    j["trajectory"] = traj;
  }
  j["warnings"] = r.warnings;
  return j;
}

/// One value per row after a two-line comment header naming the statistic
/// and its unit.
inline void write_csv(std::ostream& out, const std::string& statistic, const std::string& unit,
                      std::span<const double> values) {
  out << "# statistic: " << statistic << "\n# unit: " << unit << "\nindex,value\n";
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out << i << ',' << buf << '\n';
  }
}

inline std::vector<double> read_csv_values(std::istream& in) {
  std::vector<double> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "index,value") throw std::runtime_error("csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("csv: malformed row '" + line + "'");
    out.push_back(std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace dac::report
