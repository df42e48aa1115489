/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/core.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace clicklab {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidIdentifier: return "InvalidIdentifier";
    case ErrorCode::kDuplicateItem: return "DuplicateItem";
    case ErrorCode::kInvalidProbability: return "InvalidProbability";
    case ErrorCode::kNotInRanking: return "NotInRanking";
    case ErrorCode::kMissingRelevance: return "MissingRelevance";
    case ErrorCode::kBehaviorCoverage: return "BehaviorCoverage";
    case ErrorCode::kDegenerateChoiceSet: return "DegenerateChoiceSet";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kZeroPropensity: return "ZeroPropensity";
    case ErrorCode::kDegenerateCorrection: return "DegenerateCorrection";
    case ErrorCode::kEmptyLog: return "EmptyLog";
    case ErrorCode::kMissingContext: return "MissingContext";
    case ErrorCode::kNeverDisplayed: return "NeverDisplayed";
    case ErrorCode::kMissingEstimate: return "MissingEstimate";
    case ErrorCode::kEmptyScenario: return "EmptyScenario";
    case ErrorCode::kModelCoverage: return "ModelCoverage";
    case ErrorCode::kFitDiverged: return "FitDiverged";
    case ErrorCode::kInconsistent: return "Inconsistent";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kPrecondition: return "Precondition";
    case ErrorCode::kBoundaryRelevance: return "BoundaryRelevance";
    case ErrorCode::kEmptyRank: return "EmptyRank";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

// RelevanceTable

void RelevanceTable::set(const QueryId& query, const ItemId& item, double relevance) {
  if (!(relevance >= 0.0 && relevance <= 1.0)) {
    throw Error(ErrorCode::kInvalidProbability,
                fmt::format("relevance of ({}, {}) is {}, outside [0,1]", query.str(), item.str(), relevance));
  }
  values_[{query, item}] = relevance;
}

double RelevanceTable::at(const QueryId& query, const ItemId& item) const {
  auto it = values_.find({query, item});
  if (it == values_.end()) {
    throw Error(ErrorCode::kMissingRelevance,
                fmt::format("no relevance declared for ({}, {})", query.str(), item.str()));
  }
  return it->second;
}

bool RelevanceTable::contains(const QueryId& query, const ItemId& item) const {
  return values_.contains({query, item});
}

std::vector<ItemId> RelevanceTable::items(const QueryId& query) const {
  std::vector<ItemId> out;
  for (const auto& [key, value] : values_) {
    if (key.first == query) out.push_back(key.second);
  }
  return out;
}

std::vector<QueryId> RelevanceTable::queries() const {
  std::vector<QueryId> out;
  for (const auto& [key, value] : values_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

// Ranking

Ranking::Ranking(std::vector<ItemId> items) : items_(std::move(items)) {
  std::set<ItemId> seen;
  for (const auto& item : items_) {
    if (!seen.insert(item).second) {
      throw Error(ErrorCode::kDuplicateItem, "item '" + item.str() + "' appears twice in a ranking");
    }
  }
}

Ranking::Ranking(std::initializer_list<const char*> items)
    : Ranking([&] {
        std::vector<ItemId> ids;
        ids.reserve(items.size());
        for (const char* s : items) ids.emplace_back(s);
        return ids;
      }()) {}

const ItemId& Ranking::at_rank(std::size_t rank) const {
  if (rank == 0 || rank > items_.size()) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("rank {} outside 1..{}", rank, items_.size()));
  }
  return items_[rank - 1];
}

bool Ranking::contains(const ItemId& item) const { return find_rank(item).has_value(); }

std::optional<std::size_t> Ranking::find_rank(const ItemId& item) const {
  auto it = std::find(items_.begin(), items_.end(), item);
  if (it == items_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - items_.begin()) + 1;
}

std::size_t rank_of(const Ranking& ranking, const ItemId& item) {
  auto rank = ranking.find_rank(item);
  if (!rank) throw Error(ErrorCode::kNotInRanking, "item '" + item.str() + "' is not in the ranking");
  return *rank;
}

// RankWeights

RankWeights RankWeights::dcg() { return RankWeights{}; }

RankWeights RankWeights::explicit_weights(std::vector<double> weights) {
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::kInvalidArgument, "rank weights must be finite");
  }
  RankWeights out;
  out.explicit_ = std::move(weights);
  return out;
}

double RankWeights::operator()(std::size_t rank) const {
  if (rank == 0) throw Error(ErrorCode::kInvalidArgument, "ranks are 1-based");
  if (explicit_) return rank <= explicit_->size() ? (*explicit_)[rank - 1] : 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

// LoggingPolicy

LoggingPolicy LoggingPolicy::deterministic(const QueryId& query, Ranking ranking) {
  LoggingPolicy policy;
  policy.add(query, std::move(ranking), 1.0);
  return policy;
}

void LoggingPolicy::add(const QueryId& query, Ranking ranking, double probability) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidProbability,
                fmt::format("policy probability {} for query {} outside [0,1]", probability, query.str()));
  }
  entries_[query].push_back(PolicyEntry{std::move(ranking), probability});
}

const std::vector<PolicyEntry>& LoggingPolicy::entries(const QueryId& query) const {
  auto it = entries_.find(query);
  if (it == entries_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "logging policy has no rankings for query " + query.str());
  }
  return it->second;
}

std::vector<QueryId> LoggingPolicy::queries() const {
  std::vector<QueryId> out;
  for (const auto& [query, entries] : entries_) out.push_back(query);
  return out;
}

const Ranking& LoggingPolicy::draw(const QueryId& query, double uniform) const {
  const auto& list = entries(query);
  double cumulative = 0.0;
  for (const auto& entry : list) {
    cumulative += entry.probability;
    if (uniform < cumulative) return entry.ranking;
  }
  // Rounding can leave the cumulative sum a hair below one.
  for (auto it = list.rbegin(); it != list.rend(); ++it) {
    if (it->probability > 0.0) return it->ranking;
  }
  return list.back().ranking;
}

// Quality

double ranking_quality(const Ranking& ranking, const RankWeights& weights, const RelevanceTable& rel,
                       const QueryId& query) {
  double total = 0.0;
  for (std::size_t k = 1; k <= ranking.size(); ++k) {
    total += weights(k) * rel.at(query, ranking.at_rank(k));
  }
  return total;
}

double model_quality(const LoggingPolicy& policy, std::span<const std::pair<QueryId, double>> queries,
                     const RankWeights& weights, const RelevanceTable& rel) {
  double mass = 0.0;
  for (const auto& [query, p] : queries) mass += p;
  if (std::abs(mass - 1.0) > LoggingPolicy::kProbabilityTolerance) {
    throw Error(ErrorCode::kInvalidProbability, fmt::format("query probabilities sum to {}", mass));
  }
  double total = 0.0;
  for (const auto& [query, p] : queries) {
    double per_query = 0.0;
    for (const auto& entry : policy.entries(query)) {
      per_query += entry.probability * ranking_quality(entry.ranking, weights, rel, query);
    }
    total += p * per_query;
  }
  return total;
}

ValidationReport validate_scenario(const RelevanceTable& rel, const LoggingPolicy& policy) {
  ValidationReport report;
  for (const auto& query : policy.queries()) {
    double mass = 0.0;
    for (const auto& entry : policy.entries(query)) {
      mass += entry.probability;
      std::set<ItemId> seen;
      for (const auto& item : entry.ranking.items()) {
        // Ranking's constructor already rejects duplicates; kept for policies built by hand.
        if (!seen.insert(item).second) {
          report.violations.push_back(
              {fmt::format("duplicate item {} in a ranking of query {}", item.str(), query.str()), query, item});
        }
        if (!rel.contains(query, item)) {
          report.violations.push_back(
              {fmt::format("no relevance for ({}, {})", query.str(), item.str()), query, item});
        }
      }
    }
    if (std::abs(mass - 1.0) > LoggingPolicy::kProbabilityTolerance) {
      report.violations.push_back(
          {fmt::format("policy probabilities of query {} sum to {}", query.str(), mass), query, std::nullopt});
    }
  }
  return report;
}

// DisplayContext

std::string DisplayContext::key() const {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PositionContext>) {
          return fmt::format("pos:{}", v.rank);
        } else if constexpr (std::is_same_v<T, ExposureContext>) {
          return fmt::format("exp:{:.12f}", v.exposure + 0.0);
        } else {
          return fmt::format("mass:{:.12f}", v.other_mass + 0.0);
        }
      },
      value_);
}

// Impression / ClickLog

Impression::Impression(QueryId q, std::size_t i, Ranking r, std::vector<std::uint8_t> c)
    : query(std::move(q)), index(i), ranking(std::move(r)), clicks(std::move(c)) {
  if (clicks.size() != ranking.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("impression {} has {} click flags for {} items", index, clicks.size(), ranking.size()));
  }
  for (auto flag : clicks) {
    if (flag > 1) throw Error(ErrorCode::kInvalidArgument, "click flags must be 0 or 1");
  }
}

bool Impression::clicked(const ItemId& item) const { return clicks[rank_of(ranking, item) - 1] != 0; }

std::size_t Impression::click_count() const {
  return static_cast<std::size_t>(std::count(clicks.begin(), clicks.end(), std::uint8_t{1}));
}

void ClickLog::append(Impression impression) {
  if (impression.query != query_) {
    throw Error(ErrorCode::kInvalidArgument,
                "impression for query " + impression.query.str() + " appended to log of " + query_.str());
  }
  if (impression.index != impressions_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("expected impression index {}, got {}", impressions_.size(), impression.index));
  }
  impressions_.push_back(std::move(impression));
}

ClickLog ClickLog::prefix(std::size_t n) const {
  ClickLog out(query_);
  n = std::min(n, impressions_.size());
  out.impressions_.assign(impressions_.begin(), impressions_.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

}  // namespace clicklab
