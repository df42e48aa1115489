/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "clicklab/error.hpp"

namespace clicklab {

/// Opaque identifier restricted to [A-Za-z0-9_.-] so it survives every
/// text format in the project without quoting.
template <typename Tag>
class Identifier {
 public:
  Identifier() = default;
  explicit Identifier(std::string value) : value_(std::move(value)) { validate(); }
  explicit Identifier(const char* value) : Identifier(std::string(value)) {}

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const Identifier&, const Identifier&) = default;

 private:
  void validate() const {
    if (value_.empty()) {
      throw Error(ErrorCode::kInvalidIdentifier, "identifier must not be empty");
    }
    for (char c : value_) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '_' || c == '-' || c == '.';
      if (!ok) {
        throw Error(ErrorCode::kInvalidIdentifier, "identifier '" + value_ + "' contains an invalid character");
      }
    }
  }

  std::string value_;
};

struct ItemTag {};
struct QueryTag {};
using ItemId = Identifier<ItemTag>;
using QueryId = Identifier<QueryTag>;

/// Ground-truth relevance R(d|q) for every declared (query, item) pair.
class RelevanceTable {
 public:
  void set(const QueryId& query, const ItemId& item, double relevance);

  /// Throws kMissingRelevance for undeclared pairs; there is no default.
  double at(const QueryId& query, const ItemId& item) const;
  bool contains(const QueryId& query, const ItemId& item) const;

  std::vector<ItemId> items(const QueryId& query) const;
  std::vector<QueryId> queries() const;
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const RelevanceTable&, const RelevanceTable&) = default;

 private:
  std::map<std::pair<QueryId, ItemId>, double> values_;
};

/// An ordered list of distinct items.  Ranks are 1-based.
class Ranking {
 public:
  Ranking() = default;
  explicit Ranking(std::vector<ItemId> items);
  Ranking(std::initializer_list<const char*> items);

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<ItemId>& items() const noexcept { return items_; }
  const ItemId& at_rank(std::size_t rank) const;
  bool contains(const ItemId& item) const;
  std::optional<std::size_t> find_rank(const ItemId& item) const;

  friend bool operator==(const Ranking&, const Ranking&) = default;

 private:
  std::vector<ItemId> items_;
};

std::size_t rank_of(const Ranking& ranking, const ItemId& item);

/// Rank weight function lambda(k).  Explicit weights beyond the supplied
/// list are zero, which gives a top-k cutoff.
class RankWeights {
 public:
  static RankWeights dcg();
  static RankWeights explicit_weights(std::vector<double> weights);

  double operator()(std::size_t rank) const;
  bool is_dcg() const noexcept { return !explicit_.has_value(); }
  const std::optional<std::vector<double>>& weights() const noexcept { return explicit_; }

 private:
  std::optional<std::vector<double>> explicit_;
};

struct PolicyEntry {
  Ranking ranking;
  double probability = 0.0;

  friend bool operator==(const PolicyEntry&, const PolicyEntry&) = default;
};

/// Distribution over displayed rankings per query.
class LoggingPolicy {
 public:
  static constexpr double kProbabilityTolerance = 1e-12;

  static LoggingPolicy deterministic(const QueryId& query, Ranking ranking);

  void add(const QueryId& query, Ranking ranking, double probability);
  const std::vector<PolicyEntry>& entries(const QueryId& query) const;
  bool has_query(const QueryId& query) const { return entries_.contains(query); }
  std::vector<QueryId> queries() const;

  /// Draws a ranking by inverse CDF from a uniform value in [0,1).
  const Ranking& draw(const QueryId& query, double uniform) const;

  friend bool operator==(const LoggingPolicy&, const LoggingPolicy&) = default;

 private:
  std::map<QueryId, std::vector<PolicyEntry>> entries_;
};

double ranking_quality(const Ranking& ranking, const RankWeights& weights, const RelevanceTable& rel,
                       const QueryId& query);

double model_quality(const LoggingPolicy& policy, std::span<const std::pair<QueryId, double>> queries,
                     const RankWeights& weights, const RelevanceTable& rel);

struct Violation {
  std::string message;
  std::optional<QueryId> query;
  std::optional<ItemId> item;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_scenario(const RelevanceTable& rel, const LoggingPolicy& policy);

// Display contexts.

struct PositionContext {
  std::size_t rank = 1;
  friend bool operator==(const PositionContext&, const PositionContext&) = default;
};
struct ExposureContext {
  double exposure = 1.0;
  friend bool operator==(const ExposureContext&, const ExposureContext&) = default;
};
struct ChoiceSetContext {
  double other_mass = 0.0;
  friend bool operator==(const ChoiceSetContext&, const ChoiceSetContext&) = default;
};

/// How an item was displayed, never including the item's own relevance.
class DisplayContext {
 public:
  using Variant = std::variant<PositionContext, ExposureContext, ChoiceSetContext>;

  DisplayContext() = default;
  DisplayContext(Variant value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  static DisplayContext position(std::size_t rank) { return DisplayContext(PositionContext{rank}); }
  static DisplayContext exposure(double kappa) { return DisplayContext(ExposureContext{kappa}); }
  static DisplayContext choice_set(double mass) { return DisplayContext(ChoiceSetContext{mass}); }

  const Variant& value() const noexcept { return value_; }

  /// Canonical key: "pos:3", "exp:0.700000000000", "mass:0.010000000000".
  /// Continuous values are rounded to 12 decimals.
  std::string key() const;

  friend bool operator==(const DisplayContext& a, const DisplayContext& b) { return a.key() == b.key(); }

 private:
  Variant value_ = PositionContext{1};
};

struct Impression {
  QueryId query;
  std::size_t index = 0;
  Ranking ranking;
  std::vector<std::uint8_t> clicks;  // aligned with ranking positions

  Impression() = default;
  Impression(QueryId query, std::size_t index, Ranking ranking, std::vector<std::uint8_t> clicks);

  bool clicked(const ItemId& item) const;
  std::size_t click_count() const;

  friend bool operator==(const Impression&, const Impression&) = default;
};

/// Interactions logged for one query; impression i carries index i.
class ClickLog {
 public:
  ClickLog() = default;
  explicit ClickLog(QueryId query) : query_(std::move(query)) {}

  void append(Impression impression);
  void reserve(std::size_t n) { impressions_.reserve(n); }

  const QueryId& query() const noexcept { return query_; }
  std::size_t size() const noexcept { return impressions_.size(); }
  bool empty() const noexcept { return impressions_.empty(); }
  const std::vector<Impression>& impressions() const noexcept { return impressions_; }
  const Impression& operator[](std::size_t i) const { return impressions_[i]; }

  /// The first n impressions as a log of their own.
  ClickLog prefix(std::size_t n) const;

  friend bool operator==(const ClickLog&, const ClickLog&) = default;

 private:
  QueryId query_;
  std::vector<Impression> impressions_;
};

}  // namespace clicklab

template <typename Tag>
struct std::hash<clicklab::Identifier<Tag>> {
  std::size_t operator()(const clicklab::Identifier<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
