/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clicklab/behavior.hpp"
#include "clicklab/core.hpp"

namespace clicklab {

enum class ClickModelKind { kPbm, kAffine };

/// Predictive click model P-hat(C=1 | d, k) = alpha_k * R_d + beta_k.
///
/// Parameters live in one flat vector laid out as
/// [alpha_1..alpha_K, beta_1..beta_K, R_1..R_M] and are named "alpha_k",
/// "beta_k" and "R_<item>".  Anchored parameters never move.  For PBM every
/// beta is anchored at zero.
class ParametricClickModel {
 public:
  /// alpha_1 anchored at 1.
  static ParametricClickModel pbm(std::vector<ItemId> items, std::size_t ranks);
  /// alpha_1 anchored at 1 and beta_1 at 0.
  static ParametricClickModel affine(std::vector<ItemId> items, std::size_t ranks);

  ClickModelKind kind() const noexcept { return kind_; }
  std::size_t ranks() const noexcept { return ranks_; }
  const std::vector<ItemId>& items() const noexcept { return items_; }
  std::size_t parameter_count() const noexcept { return values_.size(); }

  std::size_t alpha_index(std::size_t rank) const;
  std::size_t beta_index(std::size_t rank) const;
  std::size_t relevance_index(const ItemId& item) const;
  std::optional<std::size_t> find_item(const ItemId& item) const;
  std::size_t parameter_index(const std::string& name) const;
  std::string parameter_name(std::size_t index) const;
  std::vector<std::string> parameter_names() const;

  double alpha(std::size_t rank) const { return values_[alpha_index(rank)]; }
  double beta(std::size_t rank) const { return values_[beta_index(rank)]; }
  double relevance(const ItemId& item) const { return values_[relevance_index(item)]; }
  double predict(std::size_t item_index, std::size_t rank) const {
    return values_[rank - 1] * values_[2 * ranks_ + item_index] + values_[ranks_ + rank - 1];
  }

  const std::vector<double>& parameters() const noexcept { return values_; }
  /// Sets every free parameter, then projects onto the feasible set.
  void set_parameters(const std::vector<double>& values);
  void set(const std::string& name, double value);

  void anchor(const std::string& name, double value);
  void release(const std::string& name);
  bool is_anchored(std::size_t index) const { return anchors_.contains(index); }
  const std::map<std::size_t, double>& anchors() const noexcept { return anchors_; }

  /// Box [0,1] per parameter, alpha_k + beta_k <= 1, anchors restored.
  void project(std::vector<double>& values) const;

 private:
  ParametricClickModel(ClickModelKind kind, std::vector<ItemId> items, std::size_t ranks);

  ClickModelKind kind_;
  std::vector<ItemId> items_;
  std::map<ItemId, std::size_t> item_index_;
  std::size_t ranks_;
  std::vector<double> values_;
  std::map<std::size_t, double> anchors_;
};

/// One (item, rank) cell: `weight` is displays per impression (or display
/// probability), `click_rate` the observed or true click probability.
struct ClickCell {
  ItemId item;
  std::size_t rank = 1;
  double weight = 0.0;
  double click_rate = 0.0;
};

struct ExactRanking {
  Ranking ranking;
  double weight = 1.0;
  std::vector<double> click_probs;
};
using ExactClickData = std::vector<ExactRanking>;

/// Exact click probabilities for every ranking the policy shows.
ExactClickData exact_click_data(const BehaviorModel& behavior, const LoggingPolicy& policy, const RelevanceTable& rel,
                                const QueryId& query);

/// Sufficient statistics of the NLL: it depends on the data only through
/// per-(item, rank) display weights and click rates.  Cells are sorted by
/// (item, rank), so impression order never matters.
class ClickStatistics {
 public:
  static ClickStatistics from_log(const ClickLog& log);
  static ClickStatistics from_exact(const ExactClickData& data);

  const std::vector<ClickCell>& cells() const noexcept { return cells_; }
  std::size_t max_rank() const noexcept { return max_rank_; }

 private:
  std::vector<ClickCell> cells_;
  std::size_t max_rank_ = 0;
};

inline constexpr double kDefaultLogClamp = 1e-12;

/// -1/(|D| |R-hat|) sum_i sum_{d shown} [c log p + (1-c) log(1-p)], with p
/// clamped to [eps, 1-eps].  |R-hat| is the model's item count.
double nll_loss(const ParametricClickModel& model, const ClickLog& log, double eps = kDefaultLogClamp);
double nll_loss(const ParametricClickModel& model, const ClickStatistics& stats, double eps = kDefaultLogClamp);

/// Analytic gradient of nll_loss with respect to the flat parameter vector
/// (anchors included; the optimizer ignores their entries).
std::vector<double> nll_gradient(const ParametricClickModel& model, const ClickStatistics& stats,
                                 double eps = kDefaultLogClamp);

/// Cross-entropy between the behavior's true click probabilities and the
/// model, averaged over the policy's rankings with the same normalization.
double expected_nll(const ParametricClickModel& model, const BehaviorModel& behavior, const LoggingPolicy& policy,
                    const RelevanceTable& rel, const QueryId& query, double eps = kDefaultLogClamp);

struct FitConfig {
  double step_size = 20.0;  // initial and largest step of the backtracking search
  std::size_t max_iterations = 200000;
  double gradient_tolerance = 1e-10;
  std::size_t restarts = 100;
  std::uint64_t seed = 0;
  double epsilon = kDefaultLogClamp;
  std::size_t workers = 1;
};

struct FitResult {
  ParametricClickModel model;
  double loss = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Projected gradient descent from the template's current parameters.
/// Throws kFitDiverged on a non-finite loss.
FitResult fit(const ParametricClickModel& model, const ClickStatistics& stats, const FitConfig& config);
FitResult fit(const ParametricClickModel& model, const ClickLog& log, const FitConfig& config);
FitResult fit(const ParametricClickModel& model, const ExactClickData& data, const FitConfig& config);

/// `lhs = coefficient * rhs` (ratio) or `lhs * rhs = coefficient` (product).
struct ParameterConstraint {
  enum class Kind { kRatio, kProduct };
  Kind kind = Kind::kRatio;
  std::string lhs;
  std::string rhs;
  double coefficient = 0.0;

  std::string to_string() const;
  /// |lhs - coefficient * rhs| (or |lhs * rhs - coefficient|) at the given values.
  double violation(const std::map<std::string, double>& values) const;
};

struct ClosedFormSolution {
  std::map<std::string, double> determined;  // anchors excluded
  std::vector<ParameterConstraint> constraints;
};

/// Peeling solve of an exact-probability PBM with alpha_1 = 1: rank-1 cells
/// fix relevances, known relevances fix alphas, and so on.  What is left is
/// reported as ratio/product constraints.  Throws kInconsistent naming the
/// violated relation.
ClosedFormSolution closed_form_pbm(const ExactClickData& data, double tolerance = 1e-9);

struct SolutionCluster {
  std::vector<double> parameters;
  std::size_t members = 0;
  double loss = 0.0;
};

struct SolutionSet {
  std::vector<std::string> parameter_names;
  std::vector<SolutionCluster> clusters;
  std::vector<double> spread;  // per parameter, max difference across clusters
  std::vector<std::vector<double>> solutions;  // every restart kept as optimal
  double best_loss = 0.0;
  std::size_t converged_restarts = 0;
  std::size_t total_restarts = 0;

  std::size_t index(const std::string& name) const;
  double spread_of(const std::string& name) const { return spread[index(name)]; }
  bool identified(const std::string& name) const { return spread_of(name) <= kClusterRadius; }
  std::map<std::string, double> values(std::size_t solution) const;

  static constexpr double kLossTolerance = 1e-9;
  static constexpr double kClusterRadius = 1e-4;
};

/// Multi-start fit from uniform [0.05, 0.95] initializations; optimal
/// restarts are clustered to expose non-unique minima.  Throws
/// kNoConvergence when no restart converges.
SolutionSet identifiability_probe(const ParametricClickModel& model, const ClickStatistics& stats,
                                  const FitConfig& config);

struct CmProbeItem {
  ItemId item;
  double truth = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;  // |z| <= 4
};

struct CmProbeReport {
  std::vector<CmProbeItem> items;
  std::size_t n = 0;
  std::size_t replications = 0;
  bool all_pass() const;
};

/// Fits the template to `replications` independent logs of size n and
/// compares the mean fitted relevance with the truth.
CmProbeReport unbiasedness_probe_cm(const ParametricClickModel& model, const BehaviorModel& behavior,
                                    const LoggingPolicy& policy, const RelevanceTable& rel, const QueryId& query,
                                    std::size_t n, std::size_t replications, const FitConfig& config,
                                    std::uint64_t seed);

/// CSV: parameter,value,identified,spread (value from the best cluster).
void write_fit_report_csv(std::ostream& out, const SolutionSet& solutions);
/// One constraint per line, e.g. "R_C = 2.000 * R_D".
void write_constraints(std::ostream& out, const ClosedFormSolution& solution);

}  // namespace clicklab
