/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/harness/scenario.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace clicklab {

std::string_view correction_kind_name(CorrectionKind kind) {
  switch (kind) {
    case CorrectionKind::kAffine:
      return "affine";
    case CorrectionKind::kNaiveCtr:
      return "naive_ctr";
    case CorrectionKind::kExposureIps:
      return "exposure_ips";
    case CorrectionKind::kTable:
      return "table";
  }
  return "unknown";
}

std::size_t Scenario::max_ranking_length() const {
  std::size_t longest = 0;
  for (const auto& [query, p] : queries) {
    if (!policy.has_query(query)) continue;
    for (const auto& entry : policy.entries(query)) longest = std::max(longest, entry.ranking.size());
  }
  return longest;
}

std::vector<ItemId> Scenario::displayed_items(const QueryId& query) const {
  std::vector<ItemId> out;
  std::set<ItemId> seen;
  for (const auto& entry : policy.entries(query)) {
    if (entry.probability == 0.0) continue;
    for (const auto& item : entry.ranking.items()) {
      if (seen.insert(item).second) out.push_back(item);
    }
  }
  return out;
}

void check_scenario(const Scenario& scenario) {
  if (scenario.queries.empty()) throw Error(ErrorCode::kInvalidArgument, "scenario declares no queries");
  const auto report = validate_scenario(scenario.rel, scenario.policy);
  if (report.ok()) return;
  std::string message = fmt::format("scenario '{}' is invalid:", scenario.name);
  for (const auto& v : report.violations) message += "\n  " + v.message;
  throw Error(ErrorCode::kInvalidArgument, message);
}

// YAML loading

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& message) const {
    const auto mark = node.Mark();
    const int line = mark.line >= 0 ? mark.line + 1 : 0;
    throw Error(ErrorCode::kParse, fmt::format("{}:{}: field '{}': {}", source_, line, field, message));
  }

  YAML::Node require(const YAML::Node& parent, const std::string& key, const std::string& path) const {
    if (!parent.IsMap()) fail(parent, path, "expected a mapping");
    YAML::Node child = parent[key];
    if (!child) fail(parent, path.empty() ? key : path + "." + key, "missing");
    return child;
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, field, "'" + node.Scalar() + "' is not a number");
    }
  }

  std::size_t count(const YAML::Node& node, const std::string& field) const {
    const double v = number(node, field);
    if (!(v >= 0.0) || v != std::floor(v)) fail(node, field, "expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::string text(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a string");
    return node.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence()) fail(node, field, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], fmt::format("{}[{}]", field, i)));
    return out;
  }

  template <typename Fn>
  auto guarded(const YAML::Node& node, const std::string& field, Fn&& fn) const {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParse) throw;
      fail(node, field, e.what());
    }
  }

  BehaviorModel behavior(const YAML::Node& node) const {
    const std::string model = text(require(node, "model", "behavior"), "behavior.model");
    if (model == "cascade") return CascadeBehavior{};
    if (model == "plackett_luce") return PlackettLuceBehavior{};
    if (model != "affine") fail(node["model"], "behavior.model", "unknown model '" + model + "'");
    auto alpha = numbers(require(node, "alpha", "behavior"), "behavior.alpha");
    std::vector<double> beta(alpha.size(), 0.0);
    if (node["beta"]) beta = numbers(node["beta"], "behavior.beta");
    return guarded(node["alpha"], "behavior.alpha", [&] { return BehaviorModel(AffineBehavior(alpha, beta)); });
  }

  ClipSchedule clip(const YAML::Node& node) const {
    if (node.IsScalar()) {
      if (node.Scalar() == "none") return NoClip{};
      fail(node, "estimator.clip", "expected 'none', {fixed: tau} or {adaptive: c}");
    }
    if (node["fixed"]) return FixedClip{number(node["fixed"], "estimator.clip.fixed")};
    if (node["adaptive"]) return AdaptiveClip{number(node["adaptive"], "estimator.clip.adaptive")};
    fail(node, "estimator.clip", "expected 'none', {fixed: tau} or {adaptive: c}");
  }

  EstimatorSpec estimator(const YAML::Node& node) const {
    EstimatorSpec spec;
    const std::string kind = text(require(node, "correction", "estimator"), "estimator.correction");
    if (kind == "affine") {
      spec.kind = CorrectionKind::kAffine;
    } else if (kind == "naive_ctr") {
      spec.kind = CorrectionKind::kNaiveCtr;
    } else if (kind == "exposure_ips") {
      spec.kind = CorrectionKind::kExposureIps;
    } else if (kind == "table") {
      spec.kind = CorrectionKind::kTable;
    } else {
      fail(node["correction"], "estimator.correction", "unknown correction '" + kind + "'");
    }
    if (node["alpha_hat"]) spec.alpha_hat = numbers(node["alpha_hat"], "estimator.alpha_hat");
    if (node["beta_hat"]) spec.beta_hat = numbers(node["beta_hat"], "estimator.beta_hat");
    if (spec.beta_hat.empty() && !spec.alpha_hat.empty()) spec.beta_hat.assign(spec.alpha_hat.size(), 0.0);
    if (spec.alpha_hat.size() != spec.beta_hat.size()) {
      fail(node, "estimator.beta_hat", "needs one entry per alpha_hat entry");
    }
    if (node["clip"]) spec.clip = clip(node["clip"]);
    if (spec.kind == CorrectionKind::kTable) {
      const auto table = require(node, "table", "estimator");
      if (!table.IsMap()) fail(table, "estimator.table", "expected a mapping from context key to [f0, f1]");
      for (const auto& kv : table) {
        const std::string key = text(kv.first, "estimator.table");
        const auto f = numbers(kv.second, "estimator.table." + key);
        if (f.size() != 2) fail(kv.second, "estimator.table." + key, "expected [f0, f1]");
        spec.table[key] = CorrectionValues{f[0], f[1]};
      }
    }
    return spec;
  }

  FitSpec fit(const YAML::Node& node) const {
    FitSpec spec;
    if (node["model"]) {
      const std::string model = text(node["model"], "fit.model");
      if (model == "pbm") {
        spec.model = ClickModelKind::kPbm;
      } else if (model == "affine") {
        spec.model = ClickModelKind::kAffine;
      } else {
        fail(node["model"], "fit.model", "unknown click model '" + model + "'");
      }
    }
    auto& c = spec.config;
    if (node["step_size"]) c.step_size = number(node["step_size"], "fit.step_size");
    if (node["max_iterations"]) c.max_iterations = count(node["max_iterations"], "fit.max_iterations");
    if (node["gradient_tolerance"]) c.gradient_tolerance = number(node["gradient_tolerance"], "fit.gradient_tolerance");
    if (node["restarts"]) c.restarts = count(node["restarts"], "fit.restarts");
    if (node["epsilon"]) c.epsilon = number(node["epsilon"], "fit.epsilon");
    if (!(c.epsilon > 0.0 && c.epsilon < 0.5)) fail(node, "fit.epsilon", "must lie in (0, 0.5)");
    if (!(c.step_size > 0.0)) fail(node, "fit.step_size", "must be positive");
    return spec;
  }

  void query(const YAML::Node& node, std::size_t index, Scenario& s) const {
    const std::string path = fmt::format("queries[{}]", index);
    const auto id_node = require(node, "id", path);
    const QueryId id = guarded(id_node, path + ".id", [&] { return QueryId(text(id_node, path + ".id")); });
    double probability = 1.0;
    if (node["probability"]) probability = number(node["probability"], path + ".probability");
    s.queries.emplace_back(id, probability);

    const auto rel = require(node, "relevance", path);
    if (!rel.IsMap()) fail(rel, path + ".relevance", "expected a mapping from item to relevance");
    for (const auto& kv : rel) {
      const std::string item = text(kv.first, path + ".relevance");
      const std::string field = path + ".relevance." + item;
      const double r = number(kv.second, field);
      guarded(kv.second, field, [&] {
        s.rel.set(id, ItemId(item), r);
        return 0;
      });
    }

    const auto policy = require(node, "policy", path);
    if (!policy.IsSequence()) fail(policy, path + ".policy", "expected a list of rankings");
    for (std::size_t j = 0; j < policy.size(); ++j) {
      const std::string entry_path = fmt::format("{}.policy[{}]", path, j);
      const auto entry = policy[j];
      const auto ranking_node = require(entry, "ranking", entry_path);
      if (!ranking_node.IsSequence()) fail(ranking_node, entry_path + ".ranking", "expected a list of items");
      std::vector<ItemId> items;
      for (std::size_t k = 0; k < ranking_node.size(); ++k) {
        const std::string field = fmt::format("{}.ranking[{}]", entry_path, k);
        items.push_back(guarded(ranking_node[k], field, [&] { return ItemId(text(ranking_node[k], field)); }));
      }
      double p = 1.0;
      if (entry["probability"]) p = number(entry["probability"], entry_path + ".probability");
      guarded(entry, entry_path, [&] {
        s.policy.add(id, Ranking(std::move(items)), p);
        return 0;
      });
    }
  }

  Scenario scenario(const YAML::Node& root) const {
    if (!root.IsMap()) fail(root, "<root>", "expected a mapping");
    Scenario s;
    if (root["name"]) s.name = text(root["name"], "name");
    const auto queries = require(root, "queries", "");
    if (!queries.IsSequence() || queries.size() == 0) fail(queries, "queries", "expected a non-empty list");
    for (std::size_t i = 0; i < queries.size(); ++i) query(queries[i], i, s);
    if (root["behavior"]) s.behavior = behavior(root["behavior"]);
    if (root["estimator"]) s.estimator = estimator(root["estimator"]);
    if (root["fit"]) s.fit = fit(root["fit"]);
    if (const auto w = root["rank_weights"]) {
      if (w.IsScalar() && w.Scalar() == "dcg") {
        s.weights = RankWeights::dcg();
      } else {
        const auto values = numbers(w, "rank_weights");
        s.weights = guarded(w, "rank_weights", [&] { return RankWeights::explicit_weights(values); });
      }
    }
    guarded(root, "queries", [&] {
      check_scenario(s);
      return 0;
    });
    return s;
  }

 private:
  std::string source_;
};

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  return Parser(source).scenario(root);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path);
}

// Estimation plumbing

namespace {

AffineCorrection affine_correction(const Scenario& scenario) {
  const auto& spec = scenario.estimator;
  if (!spec.alpha_hat.empty()) return AffineCorrection{spec.alpha_hat, spec.beta_hat, spec.clip};
  const auto* affine = std::get_if<AffineBehavior>(&scenario.behavior);
  if (!affine) {
    throw Error(ErrorCode::kInvalidArgument, "affine correction without alpha_hat needs an affine behavior to match");
  }
  return AffineCorrection::matched(*affine, spec.clip);
}

}  // namespace

CorrectionFunction build_correction(const Scenario& scenario, const QueryId& query, std::size_t n) {
  const auto& spec = scenario.estimator;
  switch (spec.kind) {
    case CorrectionKind::kAffine:
      return to_correction_function(apply_clipping(affine_correction(scenario), n));
    case CorrectionKind::kExposureIps:
      return exposure_ips_correction(scenario.behavior, scenario.rel, scenario.policy, query,
                                     clip_threshold(spec.clip, n));
    case CorrectionKind::kTable: {
      CorrectionFunction f;
      for (const auto& [key, values] : spec.table) f.set(key, values);
      return f;
    }
    case CorrectionKind::kNaiveCtr:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument, "naive CTR has no correction function");
}

RelevanceEstimate run_estimator(const Scenario& scenario, const ClickLog& log) {
  if (scenario.estimator.kind == CorrectionKind::kNaiveCtr) return naive_ctr(log);
  const auto f = build_correction(scenario, log.query(), log.size());
  const auto contexts = log_contexts(scenario.behavior, scenario.rel, log);
  auto est = estimate_relevance(log, f, contexts);
  for (const auto& item : scenario.displayed_items(log.query())) est.values.try_emplace(item, 0.0);
  return est;
}

ExpectedEstimate expected_estimator_value(const Scenario& scenario, const QueryId& query, const ItemId& item,
                                          std::size_t n) {
  if (scenario.estimator.kind == CorrectionKind::kNaiveCtr) {
    return expected_ctr(scenario.behavior, scenario.policy, scenario.rel, query, item);
  }
  return expected_estimate(scenario.behavior, scenario.policy, build_correction(scenario, query, n), scenario.rel,
                           query, item);
}

std::map<ItemId, double> estimator_standard_errors(const Scenario& scenario, const ClickLog& log) {
  if (scenario.estimator.kind == CorrectionKind::kNaiveCtr) {
    std::map<ItemId, std::pair<double, double>> counts;  // clicks, displays
    for (const auto& imp : log.impressions()) {
      for (std::size_t k = 0; k < imp.ranking.size(); ++k) {
        auto& c = counts[imp.ranking.items()[k]];
        c.first += imp.clicks[k];
        c.second += 1.0;
      }
    }
    std::map<ItemId, double> out;
    for (const auto& [item, c] : counts) {
      const double p = c.first / c.second;
      out[item] = std::sqrt(p * (1.0 - p) / c.second);
    }
    return out;
  }
  const auto f = build_correction(scenario, log.query(), log.size());
  const auto contexts = log_contexts(scenario.behavior, scenario.rel, log);
  auto out = estimate_standard_errors(log, f, contexts);
  for (const auto& item : scenario.displayed_items(log.query())) out.try_emplace(item, 0.0);
  return out;
}

}  // namespace clicklab
