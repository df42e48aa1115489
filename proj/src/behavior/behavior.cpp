/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/behavior.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "clicklab/parallel.hpp"

namespace clicklab {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> relevances(const RelevanceTable& rel, const QueryId& query, const Ranking& ranking) {
  std::vector<double> out;
  out.reserve(ranking.size());
  for (const auto& item : ranking.items()) out.push_back(rel.at(query, item));
  return out;
}

void require_coverage(const AffineBehavior& affine, const Ranking& ranking) {
  if (ranking.size() > affine.ranks()) {
    throw Error(ErrorCode::kBehaviorCoverage,
                fmt::format("affine behavior defines {} ranks, ranking has {}", affine.ranks(), ranking.size()));
  }
}

double total_mass(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v;
  return s;
}

}  // namespace

AffineBehavior::AffineBehavior(std::vector<double> alpha, std::vector<double> beta)
    : alpha_(std::move(alpha)), beta_(std::move(beta)) {
  if (alpha_.size() != beta_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "affine behavior needs one beta per alpha");
  }
  for (std::size_t k = 0; k < alpha_.size(); ++k) {
    const double a = alpha_[k];
    const double b = beta_[k];
    if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0 && a + b <= 1.0 + 1e-12)) {
      throw Error(ErrorCode::kInvalidProbability,
                  fmt::format("rank {}: alpha={} beta={} violates alpha,beta in [0,1], alpha+beta <= 1", k + 1, a, b));
    }
  }
}

AffineBehavior AffineBehavior::uniform(std::size_t ranks, double alpha, double beta) {
  return AffineBehavior(std::vector<double>(ranks, alpha), std::vector<double>(ranks, beta));
}

double AffineBehavior::alpha(std::size_t rank) const {
  if (rank == 0 || rank > alpha_.size()) {
    throw Error(ErrorCode::kBehaviorCoverage, fmt::format("no alpha for rank {}", rank));
  }
  return alpha_[rank - 1];
}

double AffineBehavior::beta(std::size_t rank) const {
  if (rank == 0 || rank > beta_.size()) {
    throw Error(ErrorCode::kBehaviorCoverage, fmt::format("no beta for rank {}", rank));
  }
  return beta_[rank - 1];
}

std::string_view behavior_name(const BehaviorModel& behavior) {
  return std::visit(Overloaded{[](const AffineBehavior&) { return std::string_view("affine"); },
                               [](const CascadeBehavior&) { return std::string_view("cascade"); },
                               [](const PlackettLuceBehavior&) { return std::string_view("plackett_luce"); }},
                    behavior);
}

std::vector<double> click_probs(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                                const Ranking& ranking) {
  const auto r = relevances(rel, query, ranking);
  std::vector<double> p(r.size());
  std::visit(Overloaded{
                 [&](const AffineBehavior& affine) {
                   require_coverage(affine, ranking);
                   for (std::size_t i = 0; i < r.size(); ++i) {
                     p[i] = std::clamp(affine.alphas()[i] * r[i] + affine.betas()[i], 0.0, 1.0);
                   }
                 },
                 [&](const CascadeBehavior&) {
                   double continuation = 1.0;
                   for (std::size_t i = 0; i < r.size(); ++i) {
                     p[i] = continuation * r[i];
                     continuation *= 1.0 - r[i];
                   }
                 },
                 [&](const PlackettLuceBehavior&) {
                   const double mass = total_mass(r);
                   if (!(mass > 0.0)) {
                     throw Error(ErrorCode::kDegenerateChoiceSet, "relevances of the ranking sum to zero");
                   }
                   for (std::size_t i = 0; i < r.size(); ++i) p[i] = r[i] / mass;
                 },
             },
             behavior);
  return p;
}

double click_prob(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                  const Ranking& ranking, const ItemId& item) {
  const std::size_t rank = rank_of(ranking, item);
  return click_probs(behavior, rel, query, ranking)[rank - 1];
}

Impression sample_impression(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                             const Ranking& ranking, std::size_t index, RandomStream& rng) {
  const auto r = relevances(rel, query, ranking);
  std::vector<std::uint8_t> clicks(r.size(), 0);
  std::visit(Overloaded{
                 [&](const AffineBehavior& affine) {
                   require_coverage(affine, ranking);
                   for (std::size_t i = 0; i < r.size(); ++i) {
                     clicks[i] = rng.bernoulli(affine.alphas()[i] * r[i] + affine.betas()[i]) ? 1 : 0;
                   }
                 },
                 [&](const CascadeBehavior&) {
                   for (std::size_t i = 0; i < r.size(); ++i) {
                     if (rng.bernoulli(r[i])) {
                       clicks[i] = 1;
                       break;
                     }
                   }
                 },
                 [&](const PlackettLuceBehavior&) {
                   const double mass = total_mass(r);
                   if (!(mass > 0.0)) {
                     throw Error(ErrorCode::kDegenerateChoiceSet, "relevances of the ranking sum to zero");
                   }
                   const double u = rng.uniform() * mass;
                   double cumulative = 0.0;
                   std::size_t chosen = r.size();
                   for (std::size_t i = 0; i < r.size(); ++i) {
                     cumulative += r[i];
                     if (u < cumulative) {
                       chosen = i;
                       break;
                     }
                   }
                   if (chosen == r.size()) {
                     // u landed in the rounding gap at the top; take the last item with mass.
                     for (std::size_t i = r.size(); i-- > 0;) {
                       if (r[i] > 0.0) {
                         chosen = i;
                         break;
                       }
                     }
                   }
                   clicks[chosen] = 1;
                 },
             },
             behavior);
  return Impression(query, index, ranking, std::move(clicks));
}

std::uint64_t impression_seed(std::uint64_t master_seed, const QueryId& query, std::size_t index) {
  return derive_seed(master_seed, stable_hash(query.str()), index);
}

ClickLog simulate_log(const BehaviorModel& behavior, const RelevanceTable& rel, const LoggingPolicy& policy,
                      const QueryId& query, std::size_t n, std::uint64_t master_seed, std::size_t workers) {
  std::vector<Impression> impressions(n);
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      RandomStream rng(impression_seed(master_seed, query, i));
      const Ranking& ranking = policy.draw(query, rng.uniform());
      impressions[i] = sample_impression(behavior, rel, query, ranking, i, rng);
    }
  });
  ClickLog log(query);
  log.reserve(n);
  for (auto& imp : impressions) log.append(std::move(imp));
  return log;
}

std::vector<DisplayContext> exposure_contexts(const BehaviorModel& behavior, const RelevanceTable& rel,
                                              const QueryId& query, const Ranking& ranking) {
  std::vector<DisplayContext> out;
  out.reserve(ranking.size());
  std::visit(Overloaded{
                 [&](const AffineBehavior&) {
                   for (std::size_t k = 1; k <= ranking.size(); ++k) out.push_back(DisplayContext::position(k));
                 },
                 [&](const CascadeBehavior&) {
                   const auto r = relevances(rel, query, ranking);
                   double continuation = 1.0;
                   for (double v : r) {
                     out.push_back(DisplayContext::exposure(continuation));
                     continuation *= 1.0 - v;
                   }
                 },
                 [&](const PlackettLuceBehavior&) {
                   const auto r = relevances(rel, query, ranking);
                   // Sum the other items directly rather than total - own, so
                   // the item's own relevance never enters the value.
                   for (std::size_t i = 0; i < r.size(); ++i) {
                     double others = 0.0;
                     for (std::size_t j = 0; j < r.size(); ++j) {
                       if (j != i) others += r[j];
                     }
                     out.push_back(DisplayContext::choice_set(others));
                   }
                 },
             },
             behavior);
  return out;
}

DisplayContext exposure_context(const BehaviorModel& behavior, const RelevanceTable& rel, const QueryId& query,
                                const Ranking& ranking, const ItemId& item) {
  const std::size_t rank = rank_of(ranking, item);
  return exposure_contexts(behavior, rel, query, ranking)[rank - 1];
}

AffinityResult affinity_check(std::span<const RelevancePoint> points, double tolerance) {
  std::set<double> distinct;
  for (const auto& p : points) distinct.insert(p.relevance);
  if (points.size() < 2 || distinct.size() < 2) {
    throw Error(ErrorCode::kInsufficientPoints, "affinity check needs at least two distinct relevances");
  }
  const double n = static_cast<double>(points.size());
  double mean_r = 0.0;
  double mean_p = 0.0;
  for (const auto& p : points) {
    mean_r += p.relevance;
    mean_p += p.click_prob;
  }
  mean_r /= n;
  mean_p /= n;
  double srr = 0.0;
  double srp = 0.0;
  for (const auto& p : points) {
    srr += (p.relevance - mean_r) * (p.relevance - mean_r);
    srp += (p.relevance - mean_r) * (p.click_prob - mean_p);
  }
  AffinityResult result;
  result.alpha = srp / srr;
  result.beta = mean_p - result.alpha * mean_r;
  for (const auto& p : points) {
    result.max_residual =
        std::max(result.max_residual, std::abs(p.click_prob - (result.alpha * p.relevance + result.beta)));
  }
  result.affine = result.max_residual <= tolerance;
  return result;
}

}  // namespace clicklab
