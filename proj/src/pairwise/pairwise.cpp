/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/pairwise.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace clicklab {
namespace {

void require_interior(double r) {
  if (!(r > 0.0 && r < 1.0)) {
    throw Error(ErrorCode::kBoundaryRelevance, fmt::format("relevance {} is not strictly inside (0, 1)", r));
  }
}

}  // namespace

bool RatioFamily::contains(const PairwiseRatios& r, double tolerance) const {
  return std::abs(r.t_plus * relevance + r.t_minus * (1.0 - relevance) - 1.0) <= tolerance;
}

RatioSolution solve_ratios(double r1, double r2) {
  require_interior(r1);
  require_interior(r2);
  if (r1 == r2) return RatioFamily{r1};
  // Subtracting the two equations gives (t+ - t-)(r1 - r2) = 0, so t+ = t-,
  // and either equation then reads t * (r1 + (1 - r1)) = 1.
  const double t = 1.0 / (r1 + (1.0 - r1));
  return PairwiseRatios{t, t};
}

AssumptionCheck check_assumption(const BehaviorModel& behavior, const RelevanceTable& rel,
                                 std::span<const RankedQuery> rankings, std::size_t rank, double tolerance) {
  if (rank == 0) throw Error(ErrorCode::kInvalidArgument, "ranks start at 1");
  AssumptionCheck check;
  check.rank = rank;
  std::set<double> distinct;
  for (const auto& rq : rankings) {
    if (rq.ranking.size() < rank) continue;
    const auto probs = click_probs(behavior, rel, rq.query, rq.ranking);
    const ItemId& item = rq.ranking.at_rank(rank);
    const double r = rel.at(rq.query, item);
    require_interior(r);
    const double p = probs[rank - 1];
    check.observations.push_back(RatioObservation{rq.query, item, r, p, p / r, (1.0 - p) / (1.0 - r)});
    distinct.insert(r);
  }
  if (check.observations.empty()) {
    throw Error(ErrorCode::kEmptyRank, fmt::format("no ranking shows an item at rank {}", rank));
  }

  // Candidate ratios: (1, 1) when relevances differ, otherwise the ratios of
  // the first observation.
  PairwiseRatios candidate{1.0, 1.0};
  if (distinct.size() == 1) {
    candidate = PairwiseRatios{check.observations.front().t_plus, check.observations.front().t_minus};
  }
  for (const auto& obs : check.observations) {
    const double residual = std::max(std::abs(obs.click_prob - candidate.t_plus * obs.relevance),
                                     std::abs((1.0 - obs.click_prob) - candidate.t_minus * (1.0 - obs.relevance)));
    if (!check.witness || residual > check.max_residual) {
      check.max_residual = residual;
      check.witness = AssumptionWitness{obs.query, obs.item, residual};
    }
  }
  check.holds = check.max_residual <= tolerance;
  if (check.holds) {
    check.ratios = candidate;
    check.witness.reset();
    if (distinct.size() == 1) check.family = RatioFamily{*distinct.begin()};
  }
  return check;
}

}  // namespace clicklab
