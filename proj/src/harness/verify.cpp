/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/harness/verify.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "clicklab/pairwise.hpp"
#include "clicklab/parallel.hpp"
#include "clicklab/random.hpp"

namespace clicklab {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string label(const QueryId& q, const ItemId& item) { return q.str() + "/" + item.str(); }

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  Moments m;
  m.mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m.mean) * (values[i] - m.mean);
  const double var = n > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
  m.se = std::sqrt(var / n);
  return m;
}

double estimate_or_zero(const RelevanceEstimate& est, const ItemId& item) {
  auto it = est.values.find(item);
  return it == est.values.end() ? 0.0 : it->second;
}

/// Exact per-impression variance of the estimator's contribution for one
/// item (display-conditional binomial for naive CTR).
double contribution_variance(const Scenario& s, const QueryId& q, const ItemId& item, std::size_t n) {
  if (s.estimator.kind == CorrectionKind::kNaiveCtr) {
    double displays = 0.0;
    for (const auto& e : s.policy.entries(q)) {
      if (e.ranking.contains(item)) displays += e.probability;
    }
    const double p = expected_ctr(s.behavior, s.policy, s.rel, q, item).expected;
    return p * (1.0 - p) / displays;
  }
  const auto f = build_correction(s, q, n);
  double first = 0.0;
  double second = 0.0;
  for (const auto& e : s.policy.entries(q)) {
    const auto rank = e.ranking.find_rank(item);
    if (!rank || e.probability == 0.0) continue;
    const double p = click_probs(s.behavior, s.rel, q, e.ranking)[*rank - 1];
    const auto& v = f.at(exposure_contexts(s.behavior, s.rel, q, e.ranking)[*rank - 1]);
    first += e.probability * (p * v.f1 + (1.0 - p) * v.f0);
    second += e.probability * (p * v.f1 * v.f1 + (1.0 - p) * v.f0 * v.f0);
  }
  return std::max(0.0, second - first * first);
}

std::string estimator_note(const Scenario& s) {
  return fmt::format("estimator {} with clip {}; behavior {}", correction_kind_name(s.estimator.kind),
                     clip_name(s.estimator.clip), behavior_name(s.behavior));
}

}  // namespace

VerificationReport run_unbiasedness_test(const Scenario& scenario, std::size_t n, std::size_t replications,
                                         std::uint64_t seed, std::size_t workers) {
  if (replications < 30) throw Error(ErrorCode::kPrecondition, "unbiasedness test needs at least 30 replications");
  if (n < 1000) throw Error(ErrorCode::kPrecondition, "unbiasedness test needs N >= 1000");
  check_scenario(scenario);
  const auto start = Clock::now();

  VerificationReport report;
  report.claim = "unbiasedness";
  report.seed = seed;
  report.n = n;
  report.replications = replications;
  report.notes.push_back(estimator_note(scenario));

  for (const auto& [query, weight] : scenario.queries) {
    const auto items = scenario.displayed_items(query);
    std::vector<RelevanceEstimate> estimates(replications);
    const std::uint64_t query_seed = derive_seed(seed, stable_hash(query.str()), 0);
    parallel_for(replications, workers, [&](std::size_t r) {
      const auto log = simulate_log(scenario.behavior, scenario.rel, scenario.policy, query, n,
                                    derive_seed(query_seed, r, 1), 1);
      estimates[r] = run_estimator(scenario, log);
    });
    for (const auto& item : items) {
      std::vector<double> values;
      values.reserve(replications);
      for (const auto& est : estimates) values.push_back(est.at(item));
      const auto m = moments(values);
      const double truth = scenario.rel.at(query, item);
      const double z = z_score(m.mean, truth, m.se);
      report.rows.push_back({"unbiased", label(query, item), m.mean, m.se, z, std::abs(z) <= kZThreshold});
      const double expected = expected_estimator_value(scenario, query, item, n).expected;
      const double zc = z_score(m.mean, expected, m.se);
      report.rows.push_back({"closed_form", label(query, item), m.mean, m.se, zc, std::abs(zc) <= kZThreshold});
      report.notes.push_back(fmt::format("{}: relevance {} closed-form expectation {}", label(query, item), truth,
                                         expected));
    }
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

std::vector<std::size_t> default_consistency_schedule() { return {100, 1000, 10000, 100000, 1000000}; }

VerificationReport run_consistency_test(const Scenario& scenario, std::span<const std::size_t> schedule,
                                        std::uint64_t seed, std::size_t workers) {
  if (schedule.empty()) throw Error(ErrorCode::kPrecondition, "consistency schedule is empty");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i] <= schedule[i - 1]) {
      throw Error(ErrorCode::kPrecondition, "consistency schedule must be strictly increasing");
    }
  }
  if (schedule.front() == 0) throw Error(ErrorCode::kPrecondition, "consistency schedule starts at N >= 1");
  if (schedule.back() < 1000000) throw Error(ErrorCode::kPrecondition, "consistency schedule must reach N >= 10^6");
  check_scenario(scenario);
  const auto start = Clock::now();

  VerificationReport report;
  report.claim = "consistency";
  report.seed = seed;
  report.n = schedule.back();
  report.replications = 1;
  report.notes.push_back(estimator_note(scenario));
  report.notes.push_back(
      "finite-sample proxy for the infinite-data limit: each prefix estimate must lie within max(4 SE, 1e-3) of "
      "the closed-form expectation at that size");

  const bool naive = scenario.estimator.kind == CorrectionKind::kNaiveCtr;
  for (const auto& [query, weight] : scenario.queries) {
    const auto log = simulate_log(scenario.behavior, scenario.rel, scenario.policy, query, schedule.back(),
                                  derive_seed(seed, stable_hash(query.str()), 0), workers);
    std::vector<ImpressionContexts> contexts;
    if (!naive) contexts = log_contexts(scenario.behavior, scenario.rel, log);
    const auto items = scenario.displayed_items(query);

    std::map<ItemId, std::pair<double, double>> final_point;  // estimate, expectation
    for (std::size_t n : schedule) {
      const auto prefix = log.prefix(n);
      RelevanceEstimate est;
      std::map<ItemId, double> se;
      if (naive) {
        est = naive_ctr(prefix);
        se = estimator_standard_errors(scenario, prefix);
      } else {
        const auto f = build_correction(scenario, query, n);
        const std::span<const ImpressionContexts> ctx(contexts.data(), n);
        est = estimate_relevance(prefix, f, ctx);
        se = estimate_standard_errors(prefix, f, ctx);
      }
      for (const auto& item : items) {
        const double value = estimate_or_zero(est, item);
        const double item_se = se.contains(item) ? se.at(item) : 0.0;
        const double expected = expected_estimator_value(scenario, query, item, n).expected;
        // A short prefix can have zero clicks and hence zero sample spread;
        // the exact standard error keeps the band honest there.
        const double exact_se = std::sqrt(contribution_variance(scenario, query, item, n) / static_cast<double>(n));
        const double band = std::max(kZThreshold * std::max(item_se, exact_se), 1e-3);
        report.rows.push_back({"consistency", fmt::format("{}@{}", label(query, item), n), value, item_se,
                               z_score(value, expected, item_se), std::abs(value - expected) <= band});
        final_point[item] = {value, expected};
      }
    }
    for (const auto& item : items) {
      const auto [value, expected] = final_point.at(item);
      const double truth = scenario.rel.at(query, item);
      report.notes.push_back(fmt::format("{}: estimate {} at N={}, closed-form limit {}, relevance {} ({})",
                                         label(query, item), value, schedule.back(), expected, truth,
                                         std::abs(expected - truth) <= 1e-12 ? "unbiased" : "biased"));
    }
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

// Feasibility

VerificationReport run_feasibility_demo(const Scenario& scenario) {
  check_scenario(scenario);
  const auto start = Clock::now();
  VerificationReport report;
  report.claim = "feasibility";

  bool deterministic = true;
  for (const auto& [query, weight] : scenario.queries) {
    std::size_t shown = 0;
    for (const auto& e : scenario.policy.entries(query)) shown += e.probability > 0.0 ? 1 : 0;
    deterministic = deterministic && shown == 1;
  }

  FeasibilityResult result;
  if (deterministic) {
    std::map<std::string, ContextObservations> by_context;
    for (const auto& [query, weight] : scenario.queries) {
      for (const auto& e : scenario.policy.entries(query)) {
        if (e.probability == 0.0) continue;
        const auto probs = click_probs(scenario.behavior, scenario.rel, query, e.ranking);
        const auto ctx = exposure_contexts(scenario.behavior, scenario.rel, query, e.ranking);
        for (std::size_t k = 0; k < e.ranking.size(); ++k) {
          auto [it, inserted] = by_context.try_emplace(ctx[k].key(), ContextObservations{ctx[k], {}});
          it->second.points.push_back({scenario.rel.at(query, e.ranking.items()[k]), probs[k]});
        }
      }
    }
    std::vector<ContextObservations> observations;
    for (auto& [key, obs] : by_context) observations.push_back(std::move(obs));
    result = solve_unbiased_correction(observations);
    report.notes.push_back("deterministic policy: per-context exact solve");
  } else {
    std::vector<ItemExposures> items;
    for (const auto& [query, weight] : scenario.queries) {
      for (const auto& item : scenario.displayed_items(query)) {
        ItemExposures ie{item, scenario.rel.at(query, item), {}};
        for (const auto& e : scenario.policy.entries(query)) {
          const auto rank = e.ranking.find_rank(item);
          if (!rank || e.probability == 0.0) continue;
          const auto probs = click_probs(scenario.behavior, scenario.rel, query, e.ranking);
          const auto ctx = exposure_contexts(scenario.behavior, scenario.rel, query, e.ranking);
          ie.exposures.push_back({ctx[*rank - 1].key(), e.probability, probs[*rank - 1]});
        }
        items.push_back(std::move(ie));
      }
    }
    result = solve_unbiased_correction_in_expectation(items);
    report.notes.push_back("stochastic policy: joint solve in expectation over the policy");
  }

  for (const auto& [key, residual] : result.context_residuals) {
    report.rows.push_back({"feasibility", key, residual, 0.0, 0.0, residual <= kFeasibilityTolerance});
  }
  report.rows.push_back({"feasibility", "max_residual", result.max_residual, 0.0, 0.0, result.feasible});
  report.notes.push_back(fmt::format("behavior {}: unbiased click-based correction {} (max residual {:.3g})",
                                     behavior_name(scenario.behavior), result.feasible ? "exists" : "does not exist",
                                     result.max_residual));
  for (const auto& [key, values] : result.f.table()) {
    report.notes.push_back(fmt::format("f({}) = ({:.6g}, {:.6g})", key, values.f0, values.f1));
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

Scenario feasibility_scenario(std::string_view family) {
  Scenario s;
  auto add = [&](const char* q, std::initializer_list<std::pair<const char*, double>> rel, Ranking ranking) {
    const QueryId id(q);
    s.queries.emplace_back(id, 1.0);
    for (const auto& [item, r] : rel) s.rel.set(id, ItemId(item), r);
    s.policy.add(id, std::move(ranking), 1.0);
  };
  if (family == "affine") {
    s.name = "affine_feasibility";
    s.behavior = AffineBehavior({1.0, 0.7, 0.4}, {0.0, 0.1, 0.2});
    add("q1", {{"A", 0.2}, {"B", 0.5}, {"C", 0.9}}, Ranking{"A", "B", "C"});
    add("q2", {{"A", 0.6}, {"B", 0.3}, {"C", 0.1}}, Ranking{"C", "A", "B"});
    add("q3", {{"A", 0.4}, {"B", 0.8}, {"C", 0.7}}, Ranking{"B", "C", "A"});
  } else if (family == "cascade") {
    s.name = "cascade_feasibility";
    s.behavior = CascadeBehavior{};
    add("q1", {{"X", 0.3}, {"A", 0.2}, {"B", 0.5}}, Ranking{"X", "A", "B"});
    add("q2", {{"X", 0.3}, {"B", 0.5}, {"C", 0.9}}, Ranking{"X", "B", "C"});
    add("q3", {{"X", 0.3}, {"C", 0.9}, {"A", 0.2}}, Ranking{"X", "C", "A"});
  } else if (family == "plackett_luce") {
    s.name = "plackett_luce_feasibility";
    s.behavior = PlackettLuceBehavior{};
    add("q1", {{"X", 0.1}, {"F", 0.01}}, Ranking{"X", "F"});
    add("q2", {{"Y", 0.5}, {"F", 0.01}}, Ranking{"Y", "F"});
    add("q3", {{"Z", 0.9}, {"F", 0.01}}, Ranking{"Z", "F"});
  } else {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown feasibility family '{}'", family));
  }
  return s;
}

// Two-ranking PBM example

ExactClickData scenario_61_data(bool extended, bool perturbed) {
  ExactClickData data{
      {Ranking{"A", "B", "C", "D"}, 1.0, {perturbed ? 0.91 : 0.90, 0.64, 0.40, 0.05}},
      {Ranking{"B", "A", "D", "C"}, 1.0, {0.80, 0.72, 0.20, 0.10}},
  };
  // A completion consistent with the two rankings: R_C = 0.5, R_D = 0.25,
  // alpha_3 = 0.8, alpha_4 = 0.2.
  if (extended) data.push_back({Ranking{"C", "D", "A", "B"}, 1.0, {0.50, 0.20, 0.72, 0.16}});
  for (auto& entry : data) entry.weight = 1.0 / static_cast<double>(data.size());
  return data;
}

VerificationReport run_scenario_61(const Scenario61Options& options) {
  const auto start = Clock::now();
  VerificationReport report;
  report.claim = "scenario61";
  report.seed = options.config.seed;
  report.replications = options.config.restarts;

  const auto data = scenario_61_data(options.extended, options.perturbed);
  std::map<std::string, double> expected{{"R_A", 0.9}, {"R_B", 0.8}, {"alpha_2", 0.8}};
  if (options.extended) {
    expected.insert({{"R_C", 0.5}, {"R_D", 0.25}, {"alpha_3", 0.8}, {"alpha_4", 0.2}});
  }
  const std::vector<std::string> non_identified =
      options.extended ? std::vector<std::string>{} : std::vector<std::string>{"R_C", "R_D"};
  struct Relation {
    std::string lhs, rhs;
    double coefficient;
  };
  const std::vector<Relation> relations =
      options.extended ? std::vector<Relation>{}
                       : std::vector<Relation>{{"R_C", "R_D", 2.0}, {"alpha_3", "alpha_4", 4.0}};
  auto relation_name = [](const Relation& r) { return fmt::format("{} = {} * {}", r.lhs, r.coefficient, r.rhs); };

  // Closed form.
  try {
    const auto solution = closed_form_pbm(data);
    for (const auto& [name, value] : expected) {
      auto it = solution.determined.find(name);
      const bool found = it != solution.determined.end();
      const double v = found ? it->second : NAN;
      report.rows.push_back({"closed_form", name, v, 0.0, 0.0, found && std::abs(v - value) <= 1e-6});
    }
    for (const auto& rel : relations) {
      double coefficient = NAN;
      for (const auto& c : solution.constraints) {
        if (c.kind == ParameterConstraint::Kind::kRatio && c.lhs == rel.lhs && c.rhs == rel.rhs) {
          coefficient = c.coefficient;
        }
      }
      report.rows.push_back({"closed_form", relation_name(rel), coefficient, 0.0, 0.0,
                             std::abs(coefficient - rel.coefficient) <= 1e-4});
    }
    if (options.extended) {
      report.rows.push_back({"closed_form", "fully_determined", static_cast<double>(solution.constraints.size()), 0.0,
                             0.0, solution.constraints.empty()});
    }
    for (const auto& c : solution.constraints) report.notes.push_back("constraint: " + c.to_string());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInconsistent) throw;
    report.rows.push_back({"closed_form", "consistent", 0.0, 0.0, 0.0, false});
    report.notes.push_back(e.what());
  }

  // Multi-start fit.
  const auto model = ParametricClickModel::pbm({ItemId("A"), ItemId("B"), ItemId("C"), ItemId("D")}, 4);
  try {
    const auto set = identifiability_probe(model, ClickStatistics::from_exact(data), options.config);
    const auto& best = set.clusters.front().parameters;
    for (const auto& [name, value] : expected) {
      const std::size_t idx = set.index(name);
      double worst = 0.0;
      for (const auto& sol : set.solutions) worst = std::max(worst, std::abs(sol[idx] - value));
      report.rows.push_back({"fit", name, best[idx], 0.0, 0.0, worst <= 1e-6});
    }
    for (const auto& rel : relations) {
      const std::size_t l = set.index(rel.lhs);
      const std::size_t r = set.index(rel.rhs);
      double worst = 0.0;
      for (const auto& sol : set.solutions) worst = std::max(worst, std::abs(sol[l] - rel.coefficient * sol[r]));
      report.rows.push_back({"constraint", relation_name(rel), worst, 0.0, 0.0, worst <= 1e-4});
    }
    for (const auto& [name, value] : expected) {
      report.rows.push_back(
          {"identified", name, set.spread_of(name), 0.0, 0.0, set.spread_of(name) <= SolutionSet::kClusterRadius});
    }
    for (const auto& name : non_identified) {
      report.rows.push_back({"non_identified", name, set.spread_of(name), 0.0, 0.0, set.spread_of(name) > 0.05});
    }
    double gap = 0.0;
    for (const auto& c : set.clusters) gap = std::max(gap, c.loss - set.best_loss);
    report.rows.push_back({"loss_gap", "clusters", gap, 0.0, 0.0, gap < SolutionSet::kLossTolerance});
    report.notes.push_back(fmt::format("{} of {} restarts converged; {} optimal solutions in {} clusters; best loss {}",
                                       set.converged_restarts, set.total_restarts, set.solutions.size(),
                                       set.clusters.size(), set.best_loss));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoConvergence) throw;
    report.rows.push_back({"fit", "converged", 0.0, 0.0, 0.0, false});
    report.notes.push_back(e.what());
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

// Pairwise

VerificationReport run_pairwise_check(const Scenario& scenario) {
  check_scenario(scenario);
  VerificationReport report;
  report.claim = "pairwise";
  std::vector<RankedQuery> rankings;
  for (const auto& [query, weight] : scenario.queries) {
    for (const auto& e : scenario.policy.entries(query)) {
      if (e.probability > 0.0) rankings.push_back({query, e.ranking});
    }
  }
  for (std::size_t k = 1; k <= scenario.max_ranking_length(); ++k) {
    const auto check = check_assumption(scenario.behavior, scenario.rel, rankings, k);
    report.rows.push_back({"pairwise", fmt::format("rank_{}", k), check.max_residual, 0.0, 0.0, check.holds});
    std::string ratios;
    for (const auto& obs : check.observations) {
      ratios += fmt::format(" {}(R={:.6g}, P={:.6g}, t+={:.6g}, t-={:.6g})", label(obs.query, obs.item),
                            obs.relevance, obs.click_prob, obs.t_plus, obs.t_minus);
    }
    if (check.holds && check.family) {
      report.notes.push_back(
          fmt::format("rank {}: holds; one relevance only, any t+ = (1 - t-(1 - {:.6g})) / {:.6g};{}", k,
                      check.family->relevance, check.family->relevance, ratios));
    } else if (check.holds) {
      report.notes.push_back(fmt::format("rank {}: holds with t+ = {:.6g}, t- = {:.6g};{}", k, check.ratios->t_plus,
                                         check.ratios->t_minus, ratios));
    } else {
      report.notes.push_back(fmt::format("rank {}: fails; witness {} residual {:.6g};{}", k,
                                         label(check.witness->query, check.witness->item), check.witness->residual,
                                         ratios));
    }
  }
  return report;
}

}  // namespace clicklab
