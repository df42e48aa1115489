/**
 * Copyright (c) 2026, clicklab contributors
 */
#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "clicklab/clicklog_io.hpp"
#include "clicklab/harness/curves.hpp"
#include "clicklab/harness/verify.hpp"

namespace {

using namespace clicklab;

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t n = 10000;
  std::size_t replications = 50;
  std::string out;
  std::string format = "csv";
  std::size_t workers = 1;
  // estimate / fit
  std::string log_path;
  std::string query;
  bool exact = false;
  std::size_t restarts = 100;
  // verify
  std::vector<std::size_t> schedule;
  std::string family = "affine";
  bool extended = false;
  bool perturbed = false;
  // curves
  double s = 0.01;
  double kappa = 0.7;
  double alpha = 1.0;
  double beta = 0.0;
  std::size_t grid = 101;
};

/// Output sink: the --out file or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(ErrorCode::kIo, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Scenario require_config(const Options& o) {
  if (o.config.empty()) throw Error(ErrorCode::kInvalidArgument, "--config is required");
  return load_scenario(o.config);
}

QueryId pick_query(const Scenario& s, const Options& o) {
  if (!o.query.empty()) return QueryId(o.query);
  if (s.queries.size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "scenario has several queries; choose one with --query");
  }
  return s.queries.front().first;
}

int emit(const VerificationReport& report, const Options& o) {
  Sink sink(o.out);
  if (o.format == "json") {
    write_report_json(sink.stream(), report);
  } else {
    write_report_csv(sink.stream(), report);
  }
  if (!o.out.empty()) write_report_text(std::cerr, report);
  return report.pass() ? 0 : 1;
}

int cmd_simulate(const Options& o) {
  const auto s = require_config(o);
  Sink sink(o.out);
  for (const auto& [query, weight] : s.queries) {
    write_click_log(sink.stream(), simulate_log(s.behavior, s.rel, s.policy, query, o.n, o.seed, o.workers));
  }
  return 0;
}

ClickLog obtain_log(const Scenario& s, const QueryId& query, const Options& o) {
  if (o.log_path.empty()) return simulate_log(s.behavior, s.rel, s.policy, query, o.n, o.seed, o.workers);
  std::ifstream in(o.log_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open log " + o.log_path);
  for (auto& log : read_click_logs(in)) {
    if (log.query() == query) return log;
  }
  throw Error(ErrorCode::kEmptyLog, "log file has no impressions for query " + query.str());
}

int cmd_estimate(const Options& o) {
  const auto s = require_config(o);
  const auto query = pick_query(s, o);
  const auto log = obtain_log(s, query, o);
  const auto est = run_estimator(s, log);
  Sink sink(o.out);
  if (o.format == "json") {
    sink.stream() << "{\"query\": \"" << query.str() << "\", \"n_used\": " << est.n_used << ", \"estimates\": {";
    bool first = true;
    for (const auto& [item, v] : est.values) {
      fmt::print(sink.stream(), "{}\"{}\": {}", first ? "" : ", ", item.str(), v);
      first = false;
    }
    sink.stream() << "}}\n";
  } else {
    write_estimate_csv(sink.stream(), est);
  }
  return 0;
}

int cmd_fit(const Options& o) {
  const auto s = require_config(o);
  const auto query = pick_query(s, o);
  ClickStatistics stats = o.exact ? ClickStatistics::from_exact(exact_click_data(s.behavior, s.policy, s.rel, query))
                                  : ClickStatistics::from_log(obtain_log(s, query, o));
  std::vector<ItemId> items = s.displayed_items(query);
  const std::size_t ranks = std::max<std::size_t>(1, s.max_ranking_length());
  const auto model = s.fit.model == ClickModelKind::kPbm ? ParametricClickModel::pbm(items, ranks)
                                                         : ParametricClickModel::affine(items, ranks);
  FitConfig config = s.fit.config;
  config.seed = o.seed;
  config.restarts = o.restarts;
  config.workers = o.workers;
  const auto set = identifiability_probe(model, stats, config);
  Sink sink(o.out);
  write_fit_report_csv(sink.stream(), set);
  if (o.exact && s.fit.model == ClickModelKind::kPbm) {
    const auto solution = closed_form_pbm(exact_click_data(s.behavior, s.policy, s.rel, query));
    write_constraints(std::cerr, solution);
  }
  return 0;
}

int cmd_curves(const Options& o) {
  CurveSpec spec;
  spec.family = parse_curve_family(o.family);
  spec.other_mass = o.s;
  spec.kappa = o.kappa;
  spec.alpha = o.alpha;
  spec.beta = o.beta;
  const auto grid = uniform_grid(o.grid);
  if (!o.out.empty()) {
    emit_curves(spec, grid, o.out);
  } else {
    write_curves_csv(std::cout, spec, curve_points(spec, grid));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"clicklab: click-based ranking estimators, simulated and verified"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "scenario YAML file");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--format", o.format, "report format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "write simulated click logs");
  add_common(simulate);
  simulate->add_option("--n", o.n, "impressions per query");

  auto* estimate = app.add_subcommand("estimate", "estimate relevances from a click log");
  add_common(estimate);
  estimate->add_option("--n", o.n, "impressions to simulate when no --log is given");
  estimate->add_option("--log", o.log_path, "click log file");
  estimate->add_option("--query", o.query, "query to estimate");

  auto* fit_cmd = app.add_subcommand("fit", "fit a click model and report identifiability");
  add_common(fit_cmd);
  fit_cmd->add_option("--n", o.n, "impressions to simulate when no --log is given");
  fit_cmd->add_option("--log", o.log_path, "click log file");
  fit_cmd->add_option("--query", o.query, "query to fit");
  fit_cmd->add_flag("--exact", o.exact, "fit exact click probabilities instead of a log");
  fit_cmd->add_option("--restarts", o.restarts, "multi-start restarts")->check(CLI::Range(2, 100000));

  auto* verify = app.add_subcommand("verify", "run a verification");
  verify->require_subcommand(1);
  auto* v_unbiased = verify->add_subcommand("unbiasedness", "Monte Carlo unbiasedness test");
  add_common(v_unbiased);
  v_unbiased->add_option("--n", o.n, "impressions per replication");
  v_unbiased->add_option("--replications", o.replications, "replications");
  auto* v_consistency = verify->add_subcommand("consistency", "growing-prefix consistency test");
  add_common(v_consistency);
  v_consistency->add_option("--schedule", o.schedule, "increasing prefix sizes")->delimiter(',');
  auto* v_feasibility = verify->add_subcommand("feasibility", "existence of an unbiased click correction");
  add_common(v_feasibility);
  v_feasibility->add_option("--family", o.family, "built-in scenario when no --config")
      ->check(CLI::IsMember({"affine", "cascade", "plackett_luce"}));
  auto* v_61 = verify->add_subcommand("scenario61", "two-ranking PBM identifiability example");
  add_common(v_61);
  v_61->add_flag("--extended", o.extended, "add a third ranking that fixes every parameter");
  v_61->add_flag("--perturbed", o.perturbed, "move one click probability off the PBM");
  v_61->add_option("--restarts", o.restarts, "multi-start restarts")->check(CLI::Range(2, 100000));
  auto* v_pairwise = verify->add_subcommand("pairwise", "pairwise-ratio assumption per rank");
  add_common(v_pairwise);

  auto* curves = app.add_subcommand("curves", "click probability against relevance");
  curves->add_option("--family", o.family, "curve family")
      ->check(CLI::IsMember({"plackett_luce", "cascade", "affine"}));
  curves->add_option("--s", o.s, "other-item mass (plackett_luce)");
  curves->add_option("--kappa", o.kappa, "exposure (cascade)");
  curves->add_option("--alpha", o.alpha, "alpha (affine)");
  curves->add_option("--beta", o.beta, "beta (affine)");
  curves->add_option("--grid", o.grid, "grid points from 0 to 1")->check(CLI::Range(2, 1000000));
  curves->add_option("--out", o.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o);
    if (estimate->parsed()) return cmd_estimate(o);
    if (fit_cmd->parsed()) return cmd_fit(o);
    if (curves->parsed()) return cmd_curves(o);
    if (v_unbiased->parsed()) {
      return emit(run_unbiasedness_test(require_config(o), o.n, o.replications, o.seed, o.workers), o);
    }
    if (v_consistency->parsed()) {
      const auto schedule = o.schedule.empty() ? default_consistency_schedule() : o.schedule;
      return emit(run_consistency_test(require_config(o), schedule, o.seed, o.workers), o);
    }
    if (v_feasibility->parsed()) {
      const auto s = o.config.empty() ? feasibility_scenario(o.family) : load_scenario(o.config);
      return emit(run_feasibility_demo(s), o);
    }
    if (v_61->parsed()) {
      Scenario61Options opts;
      opts.extended = o.extended;
      opts.perturbed = o.perturbed;
      opts.config.seed = o.seed;
      opts.config.restarts = o.restarts;
      opts.config.workers = o.workers;
      return emit(run_scenario_61(opts), o);
    }
    if (v_pairwise->parsed()) return emit(run_pairwise_check(require_config(o)), o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
