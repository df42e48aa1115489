/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "clicklab/behavior.hpp"
#include "clicklab/core.hpp"

namespace clicklab {

/// f(0, x) and f(1, x) for one display context.
struct CorrectionValues {
  double f0 = 0.0;
  double f1 = 0.0;

  friend bool operator==(const CorrectionValues&, const CorrectionValues&) = default;
};

/// The per-context transform of a counterfactual estimator, keyed by
/// DisplayContext::key().
class CorrectionFunction {
 public:
  void set(const DisplayContext& context, CorrectionValues values) { table_[context.key()] = values; }
  void set(const std::string& key, CorrectionValues values) { table_[key] = values; }

  /// Throws kMissingContext naming the key.
  const CorrectionValues& at(const std::string& key) const;
  const CorrectionValues& at(const DisplayContext& context) const { return at(context.key()); }
  bool contains(const std::string& key) const { return table_.contains(key); }

  const std::map<std::string, CorrectionValues>& table() const noexcept { return table_; }
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::map<std::string, CorrectionValues> table_;
};

struct AffineParameters {
  double alpha = 1.0;
  double beta = 0.0;
};

/// f1 = (1 - beta) / alpha, f0 = -beta / alpha.  Throws kZeroPropensity for alpha <= 0.
CorrectionValues affine_to_f(double alpha, double beta);

/// alpha = 1 / (f1 - f0), beta = -f0 / (f1 - f0).  Throws kDegenerateCorrection when f1 == f0.
AffineParameters f_to_affine(const CorrectionValues& f);

struct NoClip {};
struct FixedClip {
  double tau = 0.0;
};
/// tau(N) = min(1, c / sqrt(N)).
struct AdaptiveClip {
  double c = 1.0;
};
using ClipSchedule = std::variant<NoClip, FixedClip, AdaptiveClip>;

/// Threshold for a log of n impressions; 0 when clipping is off.
double clip_threshold(const ClipSchedule& schedule, std::size_t n);
std::string clip_name(const ClipSchedule& schedule);

/// Position-based correction with estimated alpha-hat / beta-hat per rank.
struct AffineCorrection {
  std::vector<double> alpha_hat;
  std::vector<double> beta_hat;
  ClipSchedule clip = NoClip{};

  static AffineCorrection matched(const AffineBehavior& behavior, ClipSchedule clip = NoClip{});
};

/// alpha-hat replaced by max(alpha-hat, tau(n)); beta-hat unchanged.
AffineCorrection apply_clipping(const AffineCorrection& correction, std::size_t n);

/// Position-keyed correction function.  Clipping is not applied here.
CorrectionFunction to_correction_function(const AffineCorrection& correction);

/// IPS over exposure contexts: f = (0, 1/max(kappa, tau)) for every
/// ExposureContext appearing in the policy's rankings.
CorrectionFunction exposure_ips_correction(const BehaviorModel& behavior, const RelevanceTable& rel,
                                           const LoggingPolicy& policy, const QueryId& query, double tau = 0.0);

struct RelevanceEstimate {
  std::map<ItemId, double> values;
  std::size_t n_used = 0;

  double at(const ItemId& item) const;
};

/// Contexts of one impression, aligned with its ranking positions.
using ImpressionContexts = std::vector<DisplayContext>;

std::vector<ImpressionContexts> log_contexts(const BehaviorModel& behavior, const RelevanceTable& rel,
                                             const ClickLog& log);

/// R-hat_d = (1/N) * sum_i f(c_i(d), x_i(d)).  Impressions that do not show d
/// contribute zero.  Items never displayed get no entry.
RelevanceEstimate estimate_relevance(const ClickLog& log, const CorrectionFunction& f,
                                     std::span<const ImpressionContexts> contexts);

/// Per-item sample standard error of the f-values the estimate averages.
std::map<ItemId, double> estimate_standard_errors(const ClickLog& log, const CorrectionFunction& f,
                                                  std::span<const ImpressionContexts> contexts);

struct ExpectedEstimate {
  double expected = 0.0;
  double bias = 0.0;
};

/// Exact expectation over the policy's rankings and the behavior's clicks:
/// E_x[P(C=1|d,x) (f1 - f0) + f0].
ExpectedEstimate expected_estimate(const BehaviorModel& behavior, const LoggingPolicy& policy,
                                   const CorrectionFunction& f, const RelevanceTable& rel, const QueryId& query,
                                   const ItemId& item);

/// Clicks over displays, per item.
RelevanceEstimate naive_ctr(const ClickLog& log);

/// Displays-weighted expected CTR (the large-N value of naive_ctr).
ExpectedEstimate expected_ctr(const BehaviorModel& behavior, const LoggingPolicy& policy, const RelevanceTable& rel,
                              const QueryId& query, const ItemId& item);

double estimate_ranking_quality(const RelevanceEstimate& estimate, const Ranking& ranking,
                                const RankWeights& weights);

void write_estimate_csv(std::ostream& out, const RelevanceEstimate& estimate);

// Feasibility of an unbiased correction.

struct ContextObservations {
  DisplayContext context;
  std::vector<RelevancePoint> points;
};

struct FeasibilityResult {
  bool feasible = false;
  CorrectionFunction f;
  double max_residual = 0.0;
  std::map<std::string, double> context_residuals;
};

inline constexpr double kFeasibilityTolerance = 1e-9;

/// Per context, least squares for P_j (f1 - f0) + f0 = R_j.  Items that share
/// a context share one (f0, f1).  Feasible iff every residual is within
/// tolerance.  Throws kEmptyScenario when there is nothing to solve.
FeasibilityResult solve_unbiased_correction(std::span<const ContextObservations> scenario,
                                            double tolerance = kFeasibilityTolerance);

/// One item under a stochastic policy: with probability `weight` it is shown
/// in `context` and clicked with probability `click_prob`.
struct ContextExposure {
  std::string context_key;
  double weight = 0.0;
  double click_prob = 0.0;
};

struct ItemExposures {
  ItemId item;
  double relevance = 0.0;
  std::vector<ContextExposure> exposures;
};

/// Joint least-squares over all contexts of
/// sum_x w_x [P_x (f1_x - f0_x) + f0_x] = R_d, one equation per item
/// (minimum-norm solution when underdetermined).
FeasibilityResult solve_unbiased_correction_in_expectation(std::span<const ItemExposures> items,
                                                           double tolerance = kFeasibilityTolerance);

}  // namespace clicklab
