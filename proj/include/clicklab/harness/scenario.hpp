/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clicklab/behavior.hpp"
#include "clicklab/clickfit.hpp"
#include "clicklab/core.hpp"
#include "clicklab/estimators.hpp"

namespace clicklab {

enum class CorrectionKind { kAffine, kNaiveCtr, kExposureIps, kTable };

std::string_view correction_kind_name(CorrectionKind kind);

struct EstimatorSpec {
  CorrectionKind kind = CorrectionKind::kAffine;
  // Affine: per-rank alpha-hat / beta-hat.  Empty means "matched to the
  // affine behavior".
  std::vector<double> alpha_hat;
  std::vector<double> beta_hat;
  ClipSchedule clip = NoClip{};
  // Table: context key -> (f0, f1).
  std::map<std::string, CorrectionValues> table;
};

struct FitSpec {
  ClickModelKind model = ClickModelKind::kPbm;
  FitConfig config;
};

/// Everything one verification run needs.
struct Scenario {
  std::string name = "scenario";
  std::vector<std::pair<QueryId, double>> queries;  // id, query probability
  RelevanceTable rel;
  LoggingPolicy policy;
  BehaviorModel behavior = AffineBehavior::uniform(1, 1.0, 0.0);
  EstimatorSpec estimator;
  FitSpec fit;
  RankWeights weights = RankWeights::dcg();

  /// Longest ranking the policy shows across queries.
  std::size_t max_ranking_length() const;
  /// Items the policy displays for a query, in first-seen order.
  std::vector<ItemId> displayed_items(const QueryId& query) const;
};

/// Throws kInvalidArgument listing every violation of validate_scenario.
void check_scenario(const Scenario& scenario);

/// YAML scenario.  Errors are kParse and cite `<source>:<line>` and the field.
Scenario parse_scenario(std::string_view text, const std::string& source = "<config>");
Scenario load_scenario(const std::string& path);

/// The correction function a scenario's estimator uses on a log of n
/// impressions of `query` (clipping resolved at n).  Not defined for naive CTR.
CorrectionFunction build_correction(const Scenario& scenario, const QueryId& query, std::size_t n);

/// Estimates per displayed item.  Items the log never shows estimate to 0
/// for counterfactual corrections (every impression contributes 0).
RelevanceEstimate run_estimator(const Scenario& scenario, const ClickLog& log);

/// Closed-form expectation of run_estimator on logs of size n.
ExpectedEstimate expected_estimator_value(const Scenario& scenario, const QueryId& query, const ItemId& item,
                                          std::size_t n);

/// Per-item standard errors of run_estimator (binomial for naive CTR).
std::map<ItemId, double> estimator_standard_errors(const Scenario& scenario, const ClickLog& log);

}  // namespace clicklab
