/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "clicklab/behavior.hpp"
#include "clicklab/core.hpp"

namespace clicklab {

/// Ratios at one rank: P(click) = t_plus * R and P(no click) = t_minus * (1 - R).
struct PairwiseRatios {
  double t_plus = 1.0;
  double t_minus = 1.0;
};

/// One equation, two unknowns: every (t_plus, t_minus) on the line
/// t_plus * R + t_minus * (1 - R) = 1 is compatible.
struct RatioFamily {
  double relevance = 0.5;

  double t_plus_at(double t_minus) const { return (1.0 - t_minus * (1.0 - relevance)) / relevance; }
  bool contains(const PairwiseRatios& r, double tolerance = 1e-12) const;
};

using RatioSolution = std::variant<PairwiseRatios, RatioFamily>;

/// Solves t_plus * r + t_minus * (1 - r) = 1 for both relevances.  Distinct
/// relevances force (1, 1); equal ones leave a RatioFamily.  Throws
/// kBoundaryRelevance for relevances outside (0, 1).
RatioSolution solve_ratios(double r1, double r2);

struct RankedQuery {
  QueryId query;
  Ranking ranking;
};

struct RatioObservation {
  QueryId query;
  ItemId item;
  double relevance = 0.0;
  double click_prob = 0.0;
  double t_plus = 0.0;   // P / R
  double t_minus = 0.0;  // (1 - P) / (1 - R)
};

struct AssumptionWitness {
  QueryId query;
  ItemId item;
  double residual = 0.0;
};

struct AssumptionCheck {
  std::size_t rank = 1;
  bool holds = false;
  std::optional<PairwiseRatios> ratios;  // set when the assumption holds with unique ratios
  std::optional<RatioFamily> family;     // set when only one relevance occurs at the rank
  std::optional<AssumptionWitness> witness;
  double max_residual = 0.0;
  std::vector<RatioObservation> observations;
};

inline constexpr double kRatioTolerance = 1e-9;

/// Collects (R, P) for every item shown at `rank` and asks whether one pair
/// of ratios explains all of them.  With two or more distinct relevances the
/// only candidate is (1, 1) and the witness is the item furthest from P = R.
/// Throws kEmptyRank when no ranking reaches `rank`, kBoundaryRelevance for
/// relevances at 0 or 1.
AssumptionCheck check_assumption(const BehaviorModel& behavior, const RelevanceTable& rel,
                                 std::span<const RankedQuery> rankings, std::size_t rank,
                                 double tolerance = kRatioTolerance);

}  // namespace clicklab
