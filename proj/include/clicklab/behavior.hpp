/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "clicklab/core.hpp"
#include "clicklab/random.hpp"

namespace clicklab {

/// P(click | d at rank k) = alpha_k * R + beta_k.
class AffineBehavior {
 public:
  AffineBehavior(std::vector<double> alpha, std::vector<double> beta);

  /// Same (alpha, beta) at each of `ranks` positions.
  static AffineBehavior uniform(std::size_t ranks, double alpha, double beta);

  double alpha(std::size_t rank) const;
  double beta(std::size_t rank) const;
  std::size_t ranks() const noexcept { return alpha_.size(); }
  const std::vector<double>& alphas() const noexcept { return alpha_; }
  const std::vector<double>& betas() const noexcept { return beta_; }

 private:
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

/// Top-down scan; the user clicks an item with probability R and stops at
/// the first click.  No abandonment.
struct CascadeBehavior {};

/// The user inspects the whole list and clicks exactly one item, chosen with
/// probability proportional to relevance.
struct PlackettLuceBehavior {};

using BehaviorModel = std::variant<AffineBehavior, CascadeBehavior, PlackettLuceBehavior>;

std::string_view behavior_name(const BehaviorModel& behavior);

/// Exact marginal click probability of `item` in the displayed ranking.
double click_prob(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                  const Ranking& ranking, const ItemId& item);

/// Marginal click probabilities for every position of the ranking.
std::vector<double> click_probs(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                                const Ranking& ranking);

Impression sample_impression(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                             const Ranking& ranking, std::size_t index, RandomStream& rng);

/// Seed of impression `index` of `query`; depends on nothing else.
std::uint64_t impression_seed(std::uint64_t master_seed, const QueryId& query, std::size_t index);

/// N impressions: each draws its ranking from the policy and then its clicks,
/// all from the impression's own derived stream.
ClickLog simulate_log(const BehaviorModel& behavior, const RelevanceTable& rel, const LoggingPolicy& policy,
                      const QueryId& query, std::size_t n, std::uint64_t master_seed, std::size_t workers = 1);

DisplayContext exposure_context(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                                const Ranking& ranking, const ItemId& item);

/// Contexts for every position of the ranking.
std::vector<DisplayContext> exposure_contexts(const BehaviorModel& behavior, const RelevanceTable& rel,
                                              const QueryId& query, const Ranking& ranking);

struct RelevancePoint {
  double relevance = 0.0;
  double click_prob = 0.0;
};

struct AffinityResult {
  bool affine = false;
  double alpha = 0.0;
  double beta = 0.0;
  double max_residual = 0.0;
};

inline constexpr double kDefaultAffinityTolerance = 1e-9;

/// Least-squares line P ~ alpha * R + beta; affine iff every residual is
/// within `tolerance`.
AffinityResult affinity_check(std::span<const RelevancePoint> points, double tolerance = kDefaultAffinityTolerance);

}  // namespace clicklab
