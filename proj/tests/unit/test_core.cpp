/**
 * Copyright (c) 2026, clicklab contributors
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "clicklab/clicklog_io.hpp"
#include "clicklab/core.hpp"
#include "clicklab/parallel.hpp"
#include "clicklab/random.hpp"

using namespace clicklab;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a clicklab::Error");
  return ErrorCode::kInvalidArgument;
}

const QueryId q1("q1");

}  // namespace

TEST_CASE("identifiers reject empty and odd characters") {
  CHECK_NOTHROW(ItemId("doc-1.v2_x"));
  CHECK(code_of([] { ItemId(""); }) == ErrorCode::kInvalidIdentifier);
  CHECK(code_of([] { ItemId("a,b"); }) == ErrorCode::kInvalidIdentifier);
  CHECK(code_of([] { QueryId("tab\there"); }) == ErrorCode::kInvalidIdentifier);
}

TEST_CASE("relevance table stores probabilities and refuses silent defaults") {
  RelevanceTable rel;
  rel.set(q1, ItemId("A"), 0.25);
  CHECK(rel.at(q1, ItemId("A")) == 0.25);
  CHECK(rel.contains(q1, ItemId("A")));
  CHECK_FALSE(rel.contains(q1, ItemId("B")));
  CHECK(code_of([&] { rel.at(q1, ItemId("B")); }) == ErrorCode::kMissingRelevance);
  CHECK(code_of([&] { rel.set(q1, ItemId("B"), 1.5); }) == ErrorCode::kInvalidProbability);
  CHECK(code_of([&] { rel.set(q1, ItemId("B"), -0.1); }) == ErrorCode::kInvalidProbability);
  CHECK(code_of([&] { rel.set(q1, ItemId("B"), NAN); }) == ErrorCode::kInvalidProbability);
}

TEST_CASE("rank_of") {
  const Ranking abc{"A", "B", "C"};
  CHECK(rank_of(abc, ItemId("B")) == 2);
  CHECK(rank_of(Ranking{"A"}, ItemId("A")) == 1);
  CHECK(code_of([] { rank_of(Ranking{"A", "B"}, ItemId("C")); }) == ErrorCode::kNotInRanking);
}

TEST_CASE("rank_of is a bijection onto 1..|y|") {
  const Ranking y{"E", "A", "D", "B", "C"};
  std::vector<bool> seen(y.size() + 1, false);
  for (const auto& item : y.items()) {
    const auto k = rank_of(y, item);
    REQUIRE(k >= 1);
    REQUIRE(k <= y.size());
    CHECK_FALSE(seen[k]);
    seen[k] = true;
    CHECK(y.at_rank(k) == item);
  }
}

TEST_CASE("rankings reject duplicate items") {
  CHECK(code_of([] { Ranking{"A", "B", "A"}; }) == ErrorCode::kDuplicateItem);
}

TEST_CASE("ranking quality") {
  RelevanceTable rel;
  rel.set(q1, ItemId("A"), 0.9);
  rel.set(q1, ItemId("B"), 0.4);
  const auto unit = RankWeights::explicit_weights({1.0});

  SUBCASE("empty ranking") { CHECK(ranking_quality(Ranking{}, RankWeights::dcg(), rel, q1) == 0.0); }
  SUBCASE("single term") {
    RelevanceTable r;
    r.set(q1, ItemId("A"), 0.5);
    CHECK(ranking_quality(Ranking{"A"}, unit, r, q1) == 0.5);
  }
  SUBCASE("two terms with DCG weights") {
    // 0.9 / log2(2) + 0.4 / log2(3)
    const double oracle = 0.9 + 0.4 / std::log2(3.0);
    CHECK(ranking_quality(Ranking{"A", "B"}, RankWeights::dcg(), rel, q1) == doctest::Approx(1.15237).epsilon(1e-5));
    CHECK(ranking_quality(Ranking{"A", "B"}, RankWeights::dcg(), rel, q1) == doctest::Approx(oracle).epsilon(1e-14));
  }
  SUBCASE("missing relevance") {
    CHECK(code_of([&] { ranking_quality(Ranking{"A", "Z"}, unit, rel, q1); }) == ErrorCode::kMissingRelevance);
  }
}

TEST_CASE("ranking quality is linear in each relevance") {
  RelevanceTable rel;
  rel.set(q1, ItemId("A"), 0.3);
  rel.set(q1, ItemId("B"), 0.2);
  rel.set(q1, ItemId("C"), 0.45);
  const Ranking y{"A", "B", "C"};
  const auto w = RankWeights::dcg();
  const double before = ranking_quality(y, w, rel, q1);
  RelevanceTable doubled = rel;
  doubled.set(q1, ItemId("C"), 0.9);
  const double after = ranking_quality(y, w, doubled, q1);
  CHECK(after - before == doctest::Approx(w(3) * 0.45).epsilon(1e-14));
}

TEST_CASE("rank weights") {
  const auto dcg = RankWeights::dcg();
  CHECK(dcg(1) == 1.0);
  for (std::size_t k = 1; k < 50; ++k) {
    CHECK(dcg(k) > 0.0);
    CHECK(dcg(k + 1) <= dcg(k));
  }
  const auto w = RankWeights::explicit_weights({1.0, 0.5});
  CHECK(w(2) == 0.5);
  CHECK(w(3) == 0.0);
}

TEST_CASE("model quality") {
  RelevanceTable rel;
  rel.set(q1, ItemId("A"), 1.0);
  rel.set(q1, ItemId("B"), 0.5);
  const auto unit = RankWeights::explicit_weights({1.0});

  SUBCASE("deterministic single query equals ranking quality bitwise") {
    const auto policy = LoggingPolicy::deterministic(q1, Ranking{"B", "A"});
    const std::vector<std::pair<QueryId, double>> queries{{q1, 1.0}};
    CHECK(model_quality(policy, queries, RankWeights::dcg(), rel) ==
          ranking_quality(Ranking{"B", "A"}, RankWeights::dcg(), rel, q1));
  }
  SUBCASE("two equiprobable rankings") {
    LoggingPolicy policy;
    policy.add(q1, Ranking{"A"}, 0.5);
    policy.add(q1, Ranking{"B"}, 0.5);
    const std::vector<std::pair<QueryId, double>> queries{{q1, 1.0}};
    CHECK(model_quality(policy, queries, unit, rel) == doctest::Approx(0.75).epsilon(1e-15));
  }
  SUBCASE("two queries by two rankings against enumeration") {
    const QueryId q2("q2");
    rel.set(q2, ItemId("A"), 0.2);
    rel.set(q2, ItemId("C"), 0.7);
    LoggingPolicy policy;
    policy.add(q1, Ranking{"A", "B"}, 0.3);
    policy.add(q1, Ranking{"B", "A"}, 0.7);
    policy.add(q2, Ranking{"A", "C"}, 0.6);
    policy.add(q2, Ranking{"C", "A"}, 0.4);
    const std::vector<std::pair<QueryId, double>> queries{{q1, 0.25}, {q2, 0.75}};
    const double l2 = 1.0 / std::log2(3.0);
    const double oracle = 0.25 * (0.3 * (1.0 + 0.5 * l2) + 0.7 * (0.5 + 1.0 * l2)) +
                          0.75 * (0.6 * (0.2 + 0.7 * l2) + 0.4 * (0.7 + 0.2 * l2));
    CHECK(model_quality(policy, queries, RankWeights::dcg(), rel) == doctest::Approx(oracle).epsilon(1e-14));
  }
  SUBCASE("query probabilities must sum to one") {
    const auto policy = LoggingPolicy::deterministic(q1, Ranking{"A"});
    const std::vector<std::pair<QueryId, double>> queries{{q1, 0.9}};
    CHECK(code_of([&] { model_quality(policy, queries, unit, rel); }) == ErrorCode::kInvalidProbability);
  }
}

TEST_CASE("validate scenario") {
  RelevanceTable rel;
  rel.set(q1, ItemId("A"), 0.5);
  rel.set(q1, ItemId("B"), 0.5);

  SUBCASE("valid") {
    LoggingPolicy policy;
    policy.add(q1, Ranking{"A", "B"}, 0.5);
    policy.add(q1, Ranking{"B", "A"}, 0.5);
    CHECK(validate_scenario(rel, policy).ok());
  }
  SUBCASE("probabilities summing to 0.9") {
    LoggingPolicy policy;
    policy.add(q1, Ranking{"A", "B"}, 0.4);
    policy.add(q1, Ranking{"B", "A"}, 0.5);
    const auto report = validate_scenario(rel, policy);
    REQUIRE(report.violations.size() == 1);
    REQUIRE(report.violations[0].query.has_value());
    CHECK(*report.violations[0].query == q1);
  }
  SUBCASE("item without relevance") {
    const auto policy = LoggingPolicy::deterministic(q1, Ranking{"A", "Z"});
    const auto report = validate_scenario(rel, policy);
    REQUIRE(report.violations.size() == 1);
    CHECK(*report.violations[0].query == q1);
    CHECK(*report.violations[0].item == ItemId("Z"));
  }
}

TEST_CASE("logging policy draws by inverse CDF") {
  LoggingPolicy policy;
  policy.add(q1, Ranking{"A", "B"}, 0.25);
  policy.add(q1, Ranking{"B", "A"}, 0.75);
  CHECK(policy.draw(q1, 0.0) == Ranking{"A", "B"});
  CHECK(policy.draw(q1, 0.2499) == Ranking{"A", "B"});
  CHECK(policy.draw(q1, 0.25) == Ranking{"B", "A"});
  CHECK(policy.draw(q1, 0.9999999) == Ranking{"B", "A"});
  CHECK(code_of([&] { policy.add(q1, Ranking{"A"}, 1.2); }) == ErrorCode::kInvalidProbability);
}

TEST_CASE("display context keys") {
  CHECK(DisplayContext::position(3).key() == "pos:3");
  CHECK(DisplayContext::exposure(0.7) == DisplayContext::exposure(1.0 - 0.3));
  CHECK(DisplayContext::choice_set(0.01).key() == DisplayContext::choice_set(0.01).key());
  CHECK_FALSE(DisplayContext::exposure(0.5) == DisplayContext::choice_set(0.5));
  CHECK_FALSE(DisplayContext::position(1) == DisplayContext::position(2));
}

TEST_CASE("impressions and logs") {
  const Impression imp(q1, 0, Ranking{"A", "B"}, {1, 0});
  CHECK(imp.clicked(ItemId("A")));
  CHECK_FALSE(imp.clicked(ItemId("B")));
  CHECK(imp.click_count() == 1);
  CHECK(code_of([] { Impression(q1, 0, Ranking{"A", "B"}, {1}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { Impression(q1, 0, Ranking{"A"}, {2}); }) == ErrorCode::kInvalidArgument);

  ClickLog log(q1);
  log.append(imp);
  CHECK(code_of([&] { log.append(Impression(q1, 5, Ranking{"A"}, {0})); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { log.append(Impression(QueryId("q2"), 1, Ranking{"A"}, {0})); }) ==
        ErrorCode::kInvalidArgument);
  log.append(Impression(q1, 1, Ranking{"B"}, {1}));
  CHECK(log.size() == 2);
  CHECK(log.prefix(1).size() == 1);
  CHECK(log.prefix(1)[0] == imp);
}

TEST_CASE("click log serialization round-trips") {
  ClickLog a(q1);
  a.append(Impression(q1, 0, Ranking{"A", "B", "C"}, {1, 0, 1}));
  a.append(Impression(q1, 1, Ranking{"C", "A"}, {0, 0}));
  ClickLog b(QueryId("q.2"));
  b.append(Impression(QueryId("q.2"), 0, Ranking{"x-1"}, {1}));

  const std::string text = serialize_click_log(a) + serialize_click_log(b);
  const auto logs = parse_click_logs(text);
  REQUIRE(logs.size() == 2);
  CHECK(logs[0] == a);
  CHECK(logs[1] == b);
  CHECK(serialize_click_log(logs[0]) + serialize_click_log(logs[1]) == text);
}

TEST_CASE("click log parse errors cite the line") {
  const std::string bad = "q1\t0\tA,1,1\nq1\t1\tA,2,1\n";
  try {
    parse_click_logs(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(code_of([] { parse_click_logs("q1\t0\tA,1,7\n"); }) == ErrorCode::kParse);
  CHECK(code_of([] { parse_click_logs("q1\tzero\tA,1,0\n"); }) == ErrorCode::kParse);
}

TEST_CASE("seed derivation and random streams are deterministic") {
  CHECK(stable_hash("q1") == stable_hash("q1"));
  CHECK(stable_hash("q1") != stable_hash("q2"));
  CHECK(derive_seed(7, 1, 2) == derive_seed(7, 1, 2));
  CHECK(derive_seed(7, 1, 2) != derive_seed(7, 2, 1));
  RandomStream a(42);
  RandomStream b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("parallel_for covers every index once for any worker count") {
  for (std::size_t workers : {1u, 2u, 3u, 8u}) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}

TEST_CASE("pairwise_sum is exact on integers and order-fixed") {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(pairwise_sum(v) == 500500.0);
  std::vector<double> tiny(100000, 0.1);
  CHECK(pairwise_sum(tiny) == doctest::Approx(10000.0).epsilon(1e-13));
}
