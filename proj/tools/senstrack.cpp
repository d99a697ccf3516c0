#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "senstrack/senstrack.hpp"

using namespace senstrack;

namespace {

struct Options {
  std::string scenario;
  std::string out = "-";
  std::optional<std::uint64_t> seed;
  int grid = 100;
  std::string lambda;
  int runs = 1000;
  std::string strategy = "myopic";
  std::string mode = "paper";
  int quad_order = 64;
  int qmc_samples = 4096;
  std::string thresholds;
  bool bayes_metrics = false;
};

Scenario load(const Options& o) {
  if (o.scenario.empty()) throw Error(ErrorCode::InvalidArgument, "--scenario is required");
  const std::string prefix = "builtin:";
  if (o.scenario.rfind(prefix, 0) == 0) return default_scenario(o.scenario.substr(prefix.size()));
  return load_scenario(o.scenario);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "not a number: " + s);
  }
  if (pos != s.size()) throw Error(ErrorCode::InvalidArgument, "not a number: " + s);
  return v;
}

std::vector<double> lambdas(const Options& o, const Scenario& s) {
  if (o.lambda.empty()) return {s.lambda};
  std::vector<double> v;
  for (const auto& t : split(o.lambda, ',')) v.push_back(parse_double(t));
  return v;
}

QuadratureSpec quad(const Options& o) {
  QuadratureSpec q;
  q.scalar_order = o.quad_order;
  q.vector_samples = o.qmc_samples;
  validate_quadrature(q);
  return q;
}

WwlbMode mode(const Options& o) {
  if (o.mode == "paper") return WwlbMode::Paper;
  if (o.mode == "exact") return WwlbMode::Exact;
  throw Error(ErrorCode::InvalidArgument, "--mode must be paper or exact");
}

StrategyFactory factory(const std::string& name, const Options& o) {
  if (name == "myopic") return {name, [](const Scenario&) { return make_myopic(); }};
  if (name == "dp") {
    const auto q = quad(o);
    const int r = o.grid;
    return {name, [q, r](const Scenario& s) { return make_dp(s, r, q); }};
  }
  if (name == "ce-wwlb") {
    const auto m = mode(o);
    return {name, [m](const Scenario& s) { return make_ce_wwlb(s, m); }};
  }
  if (name.rfind("ea:", 0) == 0) {
    const int per = static_cast<int>(parse_double(name.substr(3)));
    return {name, [per](const Scenario& s) { return make_equal_allocation(s, per); }};
  }
  if (name.rfind("fixed:", 0) == 0) {
    const int id = static_cast<int>(parse_double(name.substr(6)));
    return {name, [id](const Scenario& s) { return make_fixed(s, id); }};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown strategy " + name);
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  body(f);
}

std::uint64_t require_seed(const Options& o) {
  if (!o.seed) throw Error(ErrorCode::InvalidArgument, "--seed is required");
  return *o.seed;
}

int cmd_validate(const Options& o) {
  const auto s = load(o);
  with_output(o.out, [&](std::ostream& os) { os << serialize_scenario(s); });
  std::cerr << "valid: " << s.n() << " states, " << s.num_controls() << " controls\n";
  return 0;
}

int cmd_enumerate(const Options& o) {
  const auto s = load(o);
  with_output(o.out, [&](std::ostream& os) {
    os << "control_id";
    for (const auto& sp : s.sensors) os << ',' << sp.name;
    os << ",energy,cost\n";
    for (const auto& c : s.controls) {
      os << c.id;
      if (c.allocation)
        for (int a : *c.allocation) os << ',' << a;
      os << ',' << fmt(s.energy(c.id)) << ',' << fmt(c.cost) << '\n';
    }
  });
  return 0;
}

int cmd_solve_dp(const Options& o) {
  const auto base = load(o);
  const auto ls = lambdas(o, base);
  if (ls.size() != 1) throw Error(ErrorCode::InvalidArgument, "solve-dp takes a single --lambda");
  const auto s = base.with_lambda(ls[0]);
  auto grid = std::make_shared<const BeliefGrid>(s.n(), o.grid);
  const auto sol = backward_induction(s, grid, quad(o));
  with_output(o.out, [&](std::ostream& os) { write_policy_csv(os, sol); });
  if (!o.thresholds.empty()) {
    if (s.n() != 2) throw Error(ErrorCode::NotTwoState, "--thresholds needs a 2-state scenario");
    with_output(o.thresholds, [&](std::ostream& os) { write_thresholds_csv(os, sol); });
  }
  return 0;
}

int cmd_sweep(const Options& o, bool single) {
  const auto s = load(o);
  const auto seed = require_seed(o);
  std::vector<StrategyFactory> family;
  for (const auto& name : split(o.strategy, ',')) family.push_back(factory(name, o));
  if (family.empty()) throw Error(ErrorCode::InvalidArgument, "--strategy is empty");
  std::vector<double> ls = o.lambda.empty() && !single ? default_lambda_grid() : lambdas(o, s);
  if (single && (ls.size() != 1 || family.size() != 1))
    throw Error(ErrorCode::InvalidArgument, "simulate takes one strategy and one lambda");
  std::vector<MetricsReport> rows;
  EpisodeOptions eo;
  eo.bayes_metrics = o.bayes_metrics;
  for (double l : ls) {
    const Scenario sl = s.with_lambda(l);
    for (const auto& f : family) {
      auto r = monte_carlo(sl, f.make(sl), o.runs, seed, eo);
      r.strategy = f.name;
      rows.push_back(std::move(r));
    }
  }
  with_output(o.out, [&](std::ostream& os) { write_sweep_csv(os, rows); });
  return 0;
}

int cmd_wwlb(const Options& o) {
  const auto base = load(o);
  const auto ls = lambdas(o, base);
  if (ls.size() != 1) throw Error(ErrorCode::InvalidArgument, "wwlb takes a single --lambda");
  const auto s = base.with_lambda(ls[0]);
  const WwlbEngine e(s, mode(o));
  const auto plan = ce_wwlb_plan(e, s, all_pairs(permutation_test_points(s.n())), s.lambda);
  with_output(o.out, [&](std::ostream& os) { write_wwlb_csv(os, plan); });
  return 0;
}

int cmd_structure(const Options& o) {
  const auto base = load(o);
  const auto ls = lambdas(o, base);
  if (ls.size() != 1) throw Error(ErrorCode::InvalidArgument, "structure takes a single --lambda");
  const auto s = base.with_lambda(ls[0]);
  const auto checks = structure_battery(s, o.grid, quad(o));
  bool ok = true;
  with_output(o.out, [&](std::ostream& os) {
    for (const auto& c : checks) {
      const char* tag = !c.applicable ? "SKIP" : (c.pass ? "PASS" : "FAIL");
      if (c.applicable && !c.pass) ok = false;
      os << tag << ' ' << c.name << ": " << c.detail << '\n';
    }
  });
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active state tracking of Markov chains under sensing costs"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--scenario", o.scenario, "scenario JSON file or builtin:<name>")->required();
    c->add_option("--out,--output", o.out, "output path, - for stdout");
  };
  auto add_lambda = [&](CLI::App* c) { c->add_option("--lambda", o.lambda, "weight(s), comma separated"); };
  auto add_quad = [&](CLI::App* c) {
    c->add_option("--grid", o.grid, "grid resolution R (spacing 1/R)");
    c->add_option("--quad-order", o.quad_order, "Gauss-Hermite order for scalar observations");
    c->add_option("--qmc-samples", o.qmc_samples, "quasi-Monte Carlo samples per component");
  };
  auto add_sim = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "master seed");
    c->add_option("--runs", o.runs, "Monte Carlo episodes");
    c->add_option("--strategy", o.strategy, "myopic, dp, ce-wwlb, ea:N, fixed:ID (comma separated for sweep)");
    c->add_option("--mode", o.mode, "WWLB mode for ce-wwlb")->check(CLI::IsMember({"paper", "exact"}));
    c->add_flag("--bayes-metrics", o.bayes_metrics, "score the exact Bayes posterior");
  };

  auto* validate = app.add_subcommand("validate", "parse and validate, print the canonical form");
  add_common(validate);
  auto* enumerate = app.add_subcommand("enumerate-controls", "list controls with energy and cost");
  add_common(enumerate);
  auto* solve = app.add_subcommand("solve-dp", "backward induction, policy CSV");
  add_common(solve);
  add_lambda(solve);
  add_quad(solve);
  solve->add_option("--thresholds", o.thresholds, "threshold CSV path (2 states)");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo metrics for one strategy");
  add_common(simulate);
  add_lambda(simulate);
  add_quad(simulate);
  add_sim(simulate);
  auto* sweep = app.add_subcommand("sweep", "trade-off curves over lambda");
  add_common(sweep);
  add_lambda(sweep);
  add_quad(sweep);
  add_sim(sweep);
  auto* wwlb = app.add_subcommand("wwlb", "CE-WWLB schedule with J and the bound per stage");
  add_common(wwlb);
  add_lambda(wwlb);
  wwlb->add_option("--mode", o.mode, "paper or exact")->check(CLI::IsMember({"paper", "exact"}));
  auto* structure = app.add_subcommand("structure", "structural verification battery");
  add_common(structure);
  add_lambda(structure);
  add_quad(structure);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*enumerate) return cmd_enumerate(o);
    if (*solve) return cmd_solve_dp(o);
    if (*simulate) return cmd_sweep(o, true);
    if (*sweep) return cmd_sweep(o, false);
    if (*wwlb) return cmd_wwlb(o);
    if (*structure) return cmd_structure(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_numeric(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
