#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dac/harness.hpp"
#include "dac/report.hpp"

namespace dac::cli {

/// Bad command line: unknown flag, missing value, malformed nu, p out of range.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Format { Json, Csv };

struct CliInvocation {
  std::string subcommand;
  ExperimentConfig config;
  Format format = Format::Json;
  std::optional<std::string> out;
  std::vector<double> ps;       // check-identity sweeps every --p given
  double chi_f = 1.0;           // gamma-sample
  double sigma_p2 = 0.0;        // gamma-sample
  std::size_t samples = 100000; // gamma-sample
  bool help = false;
  std::string help_text;
};

inline const char* nu_grammar() {
  return "color law: two-point:a,b,alpha (alpha = P(b)) | gaussian:mean,var | "
         "discrete:v1:w1,v2:w2,...";
}

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"estimate",     "lln",          "clt",
                                              "cluster-clt",  "weighted-lln", "gamma-sample",
                                              "check-identity"};
  return names;
}

/// Parses argv (without the program name) into a validated invocation.
inline CliInvocation parse_invocation(const std::vector<std::string>& args) {
  CLI::App app{"Divide-and-color simulation and verification toolkit"};
  app.require_subcommand(1);
  app.footer(std::string("--nu ") + nu_grammar() +
             "\nExit status: 0 all tests pass, 2 a test failed, 1 usage or execution error.");

  CliInvocation inv;
  std::vector<int> radii;
  std::vector<double> ps;
  std::string nu = "two-point:-1,1,0.5";
  std::string mode = "annealed";
  std::string format = "json";
  std::string proxy, regime, out;
  std::size_t graph_replicates = 100, color_replicates = 1000;
  std::uint64_t seed = 0;
  int margin = -1;
  unsigned workers = 1;
  double level = 0.01;

  static const std::map<std::string, std::string> about{
      {"estimate", "percolation functionals theta, chi_f, kappa, sigma_p2 on the inner window"},
      {"lln", "law of large numbers for the window magnetization"},
      {"clt", "central limit theorem for the centered window sum"},
      {"cluster-clt", "Gaussian fluctuations of the infinite-cluster volume"},
      {"weighted-lln", "weighted cluster average and its condition ratio"},
      {"gamma-sample", "draw from the annealed limit law for given chi_f and sigma_p2"},
      {"check-identity", "site and cluster square sums agree on sampled graphs"}};
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    const bool gamma = name == "gamma-sample";
    if (!gamma) {
      sub->add_option("--dim", inv.config.dim, "lattice dimension")->check(CLI::PositiveNumber);
      sub->add_option("--radius", radii, "box radius; repeat for a window list (lln)")
          ->required()
          ->check(CLI::NonNegativeNumber);
      auto* p = sub->add_option("--p", ps, "bond probability in [0,1]")->required()->check(CLI::Range(0.0, 1.0));
      if (name != "check-identity") p->expected(1);
      sub->add_option("--margin", margin, "inner-window margin (default ceil(4 ln(2n+1)))")
          ->check(CLI::NonNegativeNumber);
      sub->add_option("--proxy", proxy, "infinite-cluster proxy rule")
          ->check(CLI::IsMember({"boundary-largest", "disabled"}));
    }
    sub->add_option("--nu", nu, nu_grammar());
    sub->add_option("--mode", mode, "quenched or annealed")->check(CLI::IsMember({"quenched", "annealed"}));
    sub->add_option("--graph-replicates,--replicates", graph_replicates, "number of graphs")
        ->check(CLI::PositiveNumber);
    sub->add_option("--color-replicates", color_replicates, "colorings per graph (quenched)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed")->envname("DCL_SEED");
    sub->add_option("--regime", regime, "subcritical or supercritical")
        ->check(CLI::IsMember({"subcritical", "supercritical"}));
    sub->add_option("--workers", workers, "worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber);
    sub->add_option("--level", level, "significance level of the KS tests")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--out", out, "output path (JSON report, or CSV dump with --format csv)");
    sub->add_option("--format", format, "json, or csv to dump the per-replicate statistic")
        ->check(CLI::IsMember({"json", "csv"}));
    if (gamma) {
      sub->add_option("--chi-f", inv.chi_f, "mean finite-cluster size")->check(CLI::NonNegativeNumber);
      sub->add_option("--sigma-p2", inv.sigma_p2, "infinite-cluster volume variance")
          ->check(CLI::NonNegativeNumber);
      sub->add_option("--samples", inv.samples, "number of draws")->check(CLI::PositiveNumber);
    }
  }

  std::vector<const char*> argv{"dac"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    inv.help = true;
    inv.help_text = app.help();
    return inv;
  } catch (const CLI::CallForAllHelp&) {
    inv.help = true;
    inv.help_text = app.help("", CLI::AppFormatMode::All);
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  inv.subcommand = app.get_subcommands().front()->get_name();
  auto& c = inv.config;
  try {
    c.nu = parse_color_measure(nu);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--nu: ") + e.what());
  }
  c.mode = parse_mode(mode);
  if (!radii.empty()) c.radii = radii;
  if (!ps.empty()) c.p = ps.front();
  inv.ps = ps;
  c.graph_replicates = graph_replicates;
  c.color_replicates = color_replicates;
  c.master_seed = seed;
  if (margin >= 0) c.margin = margin;
  if (!proxy.empty()) c.proxy_rule = parse_proxy_rule(proxy);
  if (!regime.empty()) c.regime = parse_regime(regime);
  c.workers = workers;
  c.level = level;
  inv.format = format == "csv" ? Format::Csv : Format::Json;
  if (!out.empty()) inv.out = out;

  if (inv.subcommand == "gamma-sample") {
    c.radii = {0};
    if (regime.empty()) c.regime = Regime::Supercritical;
  }
  if (inv.format == Format::Csv) {
    if (!inv.out) throw UsageError("--format csv: requires --out");
    if (inv.subcommand == "estimate" || inv.subcommand == "check-identity")
      throw UsageError("--format csv: " + inv.subcommand + " has no per-replicate statistic");
  }
  try {
    c = resolve(c);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return inv;
}

namespace detail {

inline report::json run_estimate(const CliInvocation& inv) {
  const auto& c = inv.config;
  const BoxLattice box(c.dim, c.radius());
  auto j = report::empty_report("estimate");
  const auto est = estimate_functionals(box, c.p, c.graph_replicates, c.master_seed, *c.margin,
                                        *c.proxy_rule, c.workers);
  j["config"] = report::to_json(c);
  j["estimates"] = report::to_json(est);
  j["seeds"] = report::seeds_json(c.master_seed, {"graph"});
  j["warnings"] = std::vector<std::string>{};
  if (auto w = near_critical_warning(c.dim, c.p)) j["warnings"].push_back(*w);
  return j;
}

inline report::json run_check_identity(const CliInvocation& inv) {
  const auto& c = inv.config;
  const BoxLattice box(c.dim, c.radius());
  const auto full = inner_window(box, 0);
  const auto inner = inner_window(box, *c.margin);
  std::size_t checked = 0, violations = 0;
  for (std::size_t k = 0; k < inv.ps.size(); ++k) {
    for (std::size_t r = 0; r < c.graph_replicates; ++r) {
      const auto cfg = sample_config(box, inv.ps[k], replicate_seed(c.master_seed + k, r), "graph");
      for (auto rule : {ProxyRule::BoundaryLargest, ProxyRule::Disabled}) {
        const auto lab = label_clusters(cfg, rule);
        for (const auto* w : {&full, &inner}) {
          ++checked;
          try {
            square_sum_parts(lab, *w);
          } catch (const InvariantViolation&) {
            ++violations;
          }
        }
      }
    }
  }
  auto j = report::empty_report("check-identity");
  j["config"] = report::to_json(c);
  j["config"]["p"] = inv.ps;
  j["seeds"] = report::seeds_json(c.master_seed, {"graph"});
  j["metrics"] = {{"identities_checked", checked}, {"violations", violations}};
  j["tests"]["tolerance"].push_back(report::to_json(ToleranceCheck{
      "square_sum_identity", "per-site sum == per-cluster sum", static_cast<double>(violations), 0.0,
      static_cast<double>(violations), 0.0, violations == 0}));
  j["passed"] = violations == 0;
  return j;
}

inline report::json run_gamma_sample(const CliInvocation& inv, std::vector<double>& draws) {
  const auto& c = inv.config;
  const double sigma2 = c.nu.variance();
  const auto regime = c.regime.value_or(Regime::Supercritical);
  const auto closed = gamma_law(regime, inv.chi_f, sigma2, inv.sigma_p2, c.nu);
  const auto sampler = gamma_sampler(regime, inv.chi_f, sigma2, inv.sigma_p2, c.nu);
  draws = sample_law(sampler, inv.samples, c.master_seed);

  auto j = report::empty_report("gamma-sample");
  j["config"] = report::to_json(c);
  j["config"]["chi_f"] = inv.chi_f;
  j["config"]["sigma_p2"] = inv.sigma_p2;
  j["config"]["samples"] = inv.samples;
  j["predictions"]["gamma_law"] = report::to_json(closed);
  j["predictions"]["gamma_sampler"] = report::to_json(sampler);
  j["seeds"] = report::seeds_json(c.master_seed, {"gamma-sampler"});
  j["statistic"] = "gamma draw";
  const auto s = summarize(draws);
  j["summary"] = report::to_json(s);
  bool passed = true;
  if (!std::holds_alternative<SampledLaw>(closed) && law_variance(closed) > 0.0) {
    auto t = ks_one_sample(draws, [&](double x) { return law_cdf(closed, x); }, c.level);
    t.name = "ks_one_sample_closed_form";
    t.prediction = describe(closed);
    passed = t.passed;
    j["tests"]["hypothesis"].push_back(report::to_json(t));
  }
  j["metrics"] = {{"is_gamma_gaussian", is_gamma_gaussian(c.nu)},
                  {"predicted_variance", law_variance(sampler)}};
  if (const auto* mix = std::get_if<GaussianMixture>(&closed))
    j["metrics"]["predicted_excess_kurtosis"] = mixture_excess_kurtosis(*mix);
  else if (std::holds_alternative<GaussianLaw>(closed))
    j["metrics"]["predicted_excess_kurtosis"] = 0.0;
  j["passed"] = passed;
  return j;
}

inline std::filesystem::path json_sibling(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace detail

/// Runs the invocation. Returns 0 when every test passes, 2 when one fails.
/// Throws on execution errors.
inline int execute(const CliInvocation& inv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  if (inv.help) {
    out << inv.help_text;
    return 0;
  }
  const auto& c = inv.config;
  report::json j;
  std::vector<double> dump;
  std::string dump_unit = "dimensionless";
  std::string dump_name;

  if (inv.subcommand == "estimate") {
    j = detail::run_estimate(inv);
  } else if (inv.subcommand == "check-identity") {
    j = detail::run_check_identity(inv);
  } else if (inv.subcommand == "gamma-sample") {
    j = detail::run_gamma_sample(inv, dump);
    dump_name = "gamma draw";
    dump_unit = "color units";
  } else {
    RunResult r;
    if (inv.subcommand == "lln")
      r = c.mode == Mode::Quenched ? run_quenched_lln(c) : run_annealed_lln(c);
    else if (inv.subcommand == "clt")
      r = c.mode == Mode::Quenched ? run_quenched_clt(c) : run_annealed_clt(c);
    else if (inv.subcommand == "cluster-clt")
      r = run_cluster_clt(c);
    else if (inv.subcommand == "weighted-lln")
      r = run_weighted_lln_check(c);
    else
      throw UsageError("unknown subcommand '" + inv.subcommand + "'");
    j = report::run_report(r);
    dump = r.statistics();
    dump_name = r.statistic_name;
    if (inv.subcommand == "lln" || inv.subcommand == "weighted-lln") dump_unit = "color units";
    if (inv.subcommand == "cluster-clt") dump_unit = "sites^(1/2)";
  }
  if (j["timing"].empty()) j["timing"] = {{"workers", c.workers}};
  if (j.contains("warnings"))
    for (const auto& w : j["warnings"]) err << "warning: " << w.get<std::string>() << '\n';

  const std::string text = j.dump(2) + "\n";
  if (inv.format == Format::Csv) {
    std::ostringstream csv;
    report::write_csv(csv, dump_name, dump_unit, dump);
    detail::write_text(*inv.out, csv.str());
    detail::write_text(detail::json_sibling(*inv.out), text);
  } else if (inv.out) {
    detail::write_text(*inv.out, text);
  } else {
    out << text;
  }
  return j["passed"].get<bool>() ? 0 : 2;
}

/// Full entry point: parse, run, map failures to exit status 1.
inline int main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                std::ostream& err = std::cerr) {
  try {
    return execute(parse_invocation(args), out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for usage\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dac::cli
