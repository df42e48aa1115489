/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/estimators.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "clicklab/parallel.hpp"

namespace clicklab {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_nonempty(const ClickLog& log) {
  if (log.empty()) throw Error(ErrorCode::kEmptyLog, "click log of query " + log.query().str() + " is empty");
}

/// Per-item contribution columns: column d holds f(c_i(d), x_i(d)) for every
/// impression i, zero where d is not shown.
struct Contributions {
  std::map<ItemId, std::vector<double>> columns;
};

Contributions collect_contributions(const ClickLog& log, const CorrectionFunction& f,
                                    std::span<const ImpressionContexts> contexts) {
  require_nonempty(log);
  if (contexts.size() != log.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} context lists for {} impressions", contexts.size(), log.size()));
  }
  Contributions out;
  const std::size_t n = log.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& imp = log[i];
    if (contexts[i].size() != imp.ranking.size()) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("impression {} has mismatched contexts", i));
    }
    for (std::size_t k = 0; k < imp.ranking.size(); ++k) {
      const auto& values = f.at(contexts[i][k]);
      auto [it, inserted] = out.columns.try_emplace(imp.ranking.items()[k]);
      if (inserted) it->second.assign(n, 0.0);
      it->second[i] = imp.clicks[k] ? values.f1 : values.f0;
    }
  }
  return out;
}

}  // namespace

const CorrectionValues& CorrectionFunction::at(const std::string& key) const {
  auto it = table_.find(key);
  if (it == table_.end()) throw Error(ErrorCode::kMissingContext, "no correction for context '" + key + "'");
  return it->second;
}

CorrectionValues affine_to_f(double alpha, double beta) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kZeroPropensity, fmt::format("alpha must be positive, got {}", alpha));
  return CorrectionValues{-beta / alpha, (1.0 - beta) / alpha};
}

AffineParameters f_to_affine(const CorrectionValues& f) {
  const double span = f.f1 - f.f0;
  if (span == 0.0) {
    throw Error(ErrorCode::kDegenerateCorrection, fmt::format("f(1,x) == f(0,x) == {}", f.f1));
  }
  return AffineParameters{1.0 / span, -f.f0 / span};
}

double clip_threshold(const ClipSchedule& schedule, std::size_t n) {
  return std::visit(Overloaded{[](const NoClip&) { return 0.0; },
                               [](const FixedClip& c) { return c.tau; },
                               [n](const AdaptiveClip& c) {
                                 if (n == 0) throw Error(ErrorCode::kInvalidArgument, "adaptive clipping needs N >= 1");
                                 return std::min(1.0, c.c / std::sqrt(static_cast<double>(n)));
                               }},
                    schedule);
}

std::string clip_name(const ClipSchedule& schedule) {
  return std::visit(Overloaded{[](const NoClip&) { return std::string("none"); },
                               [](const FixedClip& c) { return fmt::format("fixed(tau={})", c.tau); },
                               [](const AdaptiveClip& c) { return fmt::format("adaptive(c={})", c.c); }},
                    schedule);
}

AffineCorrection AffineCorrection::matched(const AffineBehavior& behavior, ClipSchedule clip) {
  return AffineCorrection{behavior.alphas(), behavior.betas(), clip};
}

AffineCorrection apply_clipping(const AffineCorrection& correction, std::size_t n) {
  AffineCorrection out = correction;
  const double tau = clip_threshold(correction.clip, n);
  for (double& a : out.alpha_hat) a = std::max(a, tau);
  return out;
}

CorrectionFunction to_correction_function(const AffineCorrection& correction) {
  if (correction.alpha_hat.size() != correction.beta_hat.size()) {
    throw Error(ErrorCode::kInvalidArgument, "alpha_hat and beta_hat differ in length");
  }
  CorrectionFunction f;
  for (std::size_t k = 0; k < correction.alpha_hat.size(); ++k) {
    f.set(DisplayContext::position(k + 1), affine_to_f(correction.alpha_hat[k], correction.beta_hat[k]));
  }
  return f;
}

CorrectionFunction exposure_ips_correction(const BehaviorModel& behavior, const RelevanceTable& rel,
                                           const LoggingPolicy& policy, const QueryId& query, double tau) {
  CorrectionFunction f;
  for (const auto& entry : policy.entries(query)) {
    for (const auto& ctx : exposure_contexts(behavior, rel, query, entry.ranking)) {
      const auto* exposure = std::get_if<ExposureContext>(&ctx.value());
      if (exposure == nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "exposure IPS needs exposure-probability contexts");
      }
      f.set(ctx, affine_to_f(std::max(exposure->exposure, tau), 0.0));
    }
  }
  return f;
}

double RelevanceEstimate::at(const ItemId& item) const {
  auto it = values.find(item);
  if (it == values.end()) throw Error(ErrorCode::kMissingEstimate, "no estimate for item " + item.str());
  return it->second;
}

std::vector<ImpressionContexts> log_contexts(const BehaviorModel& behavior, const RelevanceTable& rel,
                                             const ClickLog& log) {
  std::vector<ImpressionContexts> out;
  out.reserve(log.size());
  // Rankings repeat heavily in a log; reuse the last computation.
  const Ranking* last = nullptr;
  for (const auto& imp : log.impressions()) {
    if (last != nullptr && *last == imp.ranking) {
      out.push_back(out.back());
    } else {
      out.push_back(exposure_contexts(behavior, rel, log.query(), imp.ranking));
    }
    last = &imp.ranking;
  }
  return out;
}

RelevanceEstimate estimate_relevance(const ClickLog& log, const CorrectionFunction& f,
                                     std::span<const ImpressionContexts> contexts) {
  auto contributions = collect_contributions(log, f, contexts);
  RelevanceEstimate est;
  est.n_used = log.size();
  const double n = static_cast<double>(log.size());
  for (const auto& [item, column] : contributions.columns) {
    est.values[item] = pairwise_sum(column) / n;
  }
  return est;
}

std::map<ItemId, double> estimate_standard_errors(const ClickLog& log, const CorrectionFunction& f,
                                                  std::span<const ImpressionContexts> contexts) {
  auto contributions = collect_contributions(log, f, contexts);
  std::map<ItemId, double> out;
  const double n = static_cast<double>(log.size());
  for (auto& [item, column] : contributions.columns) {
    const double mean = pairwise_sum(column) / n;
    for (double& v : column) v = (v - mean) * (v - mean);
    const double var = n > 1 ? pairwise_sum(column) / (n - 1.0) : 0.0;
    out[item] = std::sqrt(var / n);
  }
  return out;
}

ExpectedEstimate expected_estimate(const BehaviorModel& behavior, const LoggingPolicy& policy,
                                   const CorrectionFunction& f, const RelevanceTable& rel, const QueryId& query,
                                   const ItemId& item) {
  double expected = 0.0;
  double display_mass = 0.0;
  for (const auto& entry : policy.entries(query)) {
    const auto rank = entry.ranking.find_rank(item);
    if (!rank || entry.probability == 0.0) continue;
    const double p = click_probs(behavior, rel, query, entry.ranking)[*rank - 1];
    const auto& values = f.at(exposure_contexts(behavior, rel, query, entry.ranking)[*rank - 1]);
    expected += entry.probability * (p * (values.f1 - values.f0) + values.f0);
    display_mass += entry.probability;
  }
  if (display_mass == 0.0) {
    throw Error(ErrorCode::kNeverDisplayed, "item " + item.str() + " is never displayed by the policy");
  }
  return ExpectedEstimate{expected, expected - rel.at(query, item)};
}

RelevanceEstimate naive_ctr(const ClickLog& log) {
  require_nonempty(log);
  std::map<ItemId, std::pair<std::size_t, std::size_t>> counts;  // clicks, displays
  for (const auto& imp : log.impressions()) {
    for (std::size_t k = 0; k < imp.ranking.size(); ++k) {
      auto& c = counts[imp.ranking.items()[k]];
      c.first += imp.clicks[k];
      c.second += 1;
    }
  }
  RelevanceEstimate est;
  est.n_used = log.size();
  for (const auto& [item, c] : counts) {
    est.values[item] = static_cast<double>(c.first) / static_cast<double>(c.second);
  }
  return est;
}

ExpectedEstimate expected_ctr(const BehaviorModel& behavior, const LoggingPolicy& policy, const RelevanceTable& rel,
                              const QueryId& query, const ItemId& item) {
  double clicks = 0.0;
  double displays = 0.0;
  for (const auto& entry : policy.entries(query)) {
    const auto rank = entry.ranking.find_rank(item);
    if (!rank || entry.probability == 0.0) continue;
    clicks += entry.probability * click_probs(behavior, rel, query, entry.ranking)[*rank - 1];
    displays += entry.probability;
  }
  if (displays == 0.0) {
    throw Error(ErrorCode::kNeverDisplayed, "item " + item.str() + " is never displayed by the policy");
  }
  const double expected = clicks / displays;
  return ExpectedEstimate{expected, expected - rel.at(query, item)};
}

double estimate_ranking_quality(const RelevanceEstimate& estimate, const Ranking& ranking,
                                const RankWeights& weights) {
  double total = 0.0;
  for (std::size_t k = 1; k <= ranking.size(); ++k) {
    total += weights(k) * estimate.at(ranking.at_rank(k));
  }
  return total;
}

void write_estimate_csv(std::ostream& out, const RelevanceEstimate& estimate) {
  out << "item_id,estimate,n_used\n";
  for (const auto& [item, value] : estimate.values) {
    fmt::print(out, "{},{},{}\n", item.str(), value, estimate.n_used);
  }
}

FeasibilityResult solve_unbiased_correction(std::span<const ContextObservations> scenario, double tolerance) {
  if (scenario.empty()) throw Error(ErrorCode::kEmptyScenario, "no contexts to solve");

  // Merge observations that arrive under the same canonical key.
  std::map<std::string, std::vector<RelevancePoint>> grouped;
  for (const auto& obs : scenario) {
    auto& points = grouped[obs.context.key()];
    points.insert(points.end(), obs.points.begin(), obs.points.end());
  }

  FeasibilityResult result;
  for (const auto& [key, points] : grouped) {
    if (points.empty()) throw Error(ErrorCode::kEmptyScenario, "context '" + key + "' has no observations");
    const double n = static_cast<double>(points.size());
    double mean_p = 0.0;
    double mean_r = 0.0;
    for (const auto& pt : points) {
      mean_p += pt.click_prob;
      mean_r += pt.relevance;
    }
    mean_p /= n;
    mean_r /= n;
    double spp = 0.0;
    double spr = 0.0;
    for (const auto& pt : points) {
      spp += (pt.click_prob - mean_p) * (pt.click_prob - mean_p);
      spr += (pt.click_prob - mean_p) * (pt.relevance - mean_r);
    }
    // Solve R = slope * P + f0 with slope = f1 - f0.
    double slope = 0.0;
    double f0 = 0.0;
    if (spp > 1e-300) {
      slope = spr / spp;
      f0 = mean_r - slope * mean_p;
    } else if (mean_p > 0.0) {
      // Every click probability equal: pick the IPS-style solution through the mean.
      slope = mean_r / mean_p;
      f0 = 0.0;
    } else {
      f0 = mean_r;
    }
    double residual = 0.0;
    for (const auto& pt : points) {
      residual = std::max(residual, std::abs(pt.click_prob * slope + f0 - pt.relevance));
    }
    result.f.set(key, CorrectionValues{f0, f0 + slope});
    result.context_residuals[key] = residual;
    result.max_residual = std::max(result.max_residual, residual);
  }
  result.feasible = result.max_residual <= tolerance;
  return result;
}

FeasibilityResult solve_unbiased_correction_in_expectation(std::span<const ItemExposures> items,
                                                           double tolerance) {
  if (items.empty()) throw Error(ErrorCode::kEmptyScenario, "no items to solve");
  std::map<std::string, Eigen::Index> column;
  for (const auto& item : items) {
    for (const auto& e : item.exposures) column.try_emplace(e.context_key, 0);
  }
  if (column.empty()) throw Error(ErrorCode::kEmptyScenario, "no displayed items");
  Eigen::Index next = 0;
  for (auto& [key, idx] : column) idx = next++;

  // Unknowns per context: (f0, slope) at columns 2c, 2c+1.
  const auto rows = static_cast<Eigen::Index>(items.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, 2 * next);
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& item = items[static_cast<std::size_t>(r)];
    b(r) = item.relevance;
    for (const auto& e : item.exposures) {
      const Eigen::Index c = column.at(e.context_key);
      a(r, 2 * c) += e.weight;
      a(r, 2 * c + 1) += e.weight * e.click_prob;
    }
  }
  const Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(b);
  const Eigen::VectorXd residuals = a * x - b;

  FeasibilityResult result;
  for (const auto& [key, c] : column) {
    result.f.set(key, CorrectionValues{x(2 * c), x(2 * c) + x(2 * c + 1)});
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double res = std::abs(residuals(r));
    result.context_residuals["item:" + items[static_cast<std::size_t>(r)].item.str()] = res;
    result.max_residual = std::max(result.max_residual, res);
  }
  result.feasible = result.max_residual <= tolerance;
  return result;
}

}  // namespace clicklab
