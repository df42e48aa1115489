/**
 * Copyright (c) 2026, clicklab contributors
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "clicklab/estimators.hpp"

using namespace clicklab;

namespace {

const QueryId q("q");
const ItemId d("d");

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a clicklab::Error");
  return ErrorCode::kInvalidArgument;
}

ClickLog single_item_log(const std::vector<std::uint8_t>& clicks) {
  ClickLog log(q);
  for (std::size_t i = 0; i < clicks.size(); ++i) log.append(Impression(q, i, Ranking{"d"}, {clicks[i]}));
  return log;
}

std::vector<ImpressionContexts> uniform_contexts(std::size_t n, const DisplayContext& ctx) {
  return std::vector<ImpressionContexts>(n, ImpressionContexts{ctx});
}

RelevanceTable one(double r) {
  RelevanceTable rel;
  rel.set(q, d, r);
  return rel;
}

/// Solves the 3x2 least-squares system [P 1] (s, f0) = R through QR-free
/// normal equations; returns the max residual.
double ls_residual(const std::vector<std::pair<double, double>>& rp) {
  double spp = 0, sp = 0, n = 0, spr = 0, sr = 0;
  for (const auto& [r, p] : rp) {
    spp += p * p;
    sp += p;
    n += 1;
    spr += p * r;
    sr += r;
  }
  const double det = spp * n - sp * sp;
  const double s = (spr * n - sp * sr) / det;
  const double f0 = (spp * sr - sp * spr) / det;
  double worst = 0;
  for (const auto& [r, p] : rp) worst = std::max(worst, std::abs(s * p + f0 - r));
  return worst;
}

}  // namespace

TEST_CASE("affine_to_f and f_to_affine") {
  auto f = affine_to_f(0.8, 0.2);
  CHECK(f.f0 == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(f.f1 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(affine_to_f(1.0, 0.0) == CorrectionValues{0.0, 1.0});
  CHECK(affine_to_f(0.5, 0.0) == CorrectionValues{0.0, 2.0});
  CHECK(code_of([] { affine_to_f(0.0, 0.1); }) == ErrorCode::kZeroPropensity);

  auto ab = f_to_affine({-0.25, 1.0});
  CHECK(ab.alpha == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(ab.beta == doctest::Approx(0.2).epsilon(1e-15));
  ab = f_to_affine({0.0, 1.0});
  CHECK(ab.alpha == 1.0);
  CHECK(ab.beta == 0.0);
  CHECK(code_of([] { f_to_affine({0.5, 0.5}); }) == ErrorCode::kDegenerateCorrection);
}

TEST_CASE("f <-> (alpha, beta) round-trips") {
  RandomStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double alpha = 1.0 - rng.uniform() * 0.999;  // (0.001, 1]
    const double beta = rng.uniform();
    const auto back = f_to_affine(affine_to_f(alpha, beta));
    CHECK(std::abs(back.alpha - alpha) <= 1e-12);
    CHECK(std::abs(back.beta - beta) <= 1e-12);
  }
}

TEST_CASE("estimate_relevance examples") {
  SUBCASE("arithmetic mean of transformed clicks") {
    CorrectionFunction f;
    f.set(DisplayContext::position(1), {0.0, 2.0});
    const auto log = single_item_log({1, 0, 1, 0});
    const auto ctx = uniform_contexts(4, DisplayContext::position(1));
    const auto est = estimate_relevance(log, f, ctx);
    CHECK(est.at(d) == 1.0);
    CHECK(est.n_used == 4);
  }
  SUBCASE("zero function") {
    CorrectionFunction f;
    f.set(DisplayContext::position(1), {0.0, 0.0});
    const auto log = single_item_log({1, 1, 0});
    CHECK(estimate_relevance(log, f, uniform_contexts(3, DisplayContext::position(1))).at(d) == 0.0);
  }
  SUBCASE("two contexts") {
    CorrectionFunction f;
    f.set(DisplayContext::position(1), {-0.25, 1.0});
    f.set(DisplayContext::position(2), {0.0, 2.0});
    const auto log = single_item_log({1, 1});
    const std::vector<ImpressionContexts> ctx{{DisplayContext::position(1)}, {DisplayContext::position(2)}};
    CHECK(estimate_relevance(log, f, ctx).at(d) == doctest::Approx(1.5).epsilon(1e-15));
  }
  SUBCASE("errors") {
    CorrectionFunction f;
    f.set(DisplayContext::position(1), {0.0, 1.0});
    CHECK(code_of([&] { estimate_relevance(ClickLog(q), f, {}); }) == ErrorCode::kEmptyLog);
    const auto log = single_item_log({1});
    try {
      estimate_relevance(log, f, uniform_contexts(1, DisplayContext::position(2)));
      FAIL("expected MissingContext");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingContext);
      CHECK(std::string(e.what()).find("pos:2") != std::string::npos);
    }
  }
  SUBCASE("items outside an impression contribute zero and never-shown items get no entry") {
    ClickLog log(q);
    log.append(Impression(q, 0, Ranking{"d"}, {1}));
    log.append(Impression(q, 1, Ranking{"e"}, {1}));
    CorrectionFunction f;
    f.set(DisplayContext::position(1), {0.0, 1.0});
    const auto est = estimate_relevance(log, f, uniform_contexts(2, DisplayContext::position(1)));
    CHECK(est.at(d) == 0.5);
    CHECK(est.at(ItemId("e")) == 0.5);
    CHECK(code_of([&] { est.at(ItemId("zz")); }) == ErrorCode::kMissingEstimate);
  }
}

TEST_CASE("expected_estimate examples") {
  const auto policy = LoggingPolicy::deterministic(q, Ranking{"d"});
  SUBCASE("matched affine correction") {
    const AffineBehavior b = AffineBehavior::uniform(1, 0.8, 0.2);
    const auto f = to_correction_function(AffineCorrection::matched(b));
    const auto e = expected_estimate(b, policy, f, one(0.5), q, d);
    CHECK(e.expected == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(e.bias) <= 1e-15);
  }
  SUBCASE("naive correction reproduces the CTR bias") {
    const AffineBehavior b = AffineBehavior::uniform(1, 0.5, 0.1);
    CorrectionFunction f;
    f.set(DisplayContext::position(1), {0.0, 1.0});
    const auto e = expected_estimate(b, policy, f, one(0.4), q, d);
    CHECK(e.expected == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(e.bias == doctest::Approx((0.5 - 1.0) * 0.4 + 0.1).epsilon(1e-14));
    const auto ctr = expected_ctr(b, policy, one(0.4), q, d);
    CHECK(ctr.expected == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("clipped IPS") {
    const AffineBehavior b = AffineBehavior::uniform(1, 0.05, 0.0);
    const auto clipped = apply_clipping(AffineCorrection::matched(b, FixedClip{0.1}), 1000);
    CHECK(clipped.alpha_hat[0] == 0.1);
    const auto e = expected_estimate(b, policy, to_correction_function(clipped), one(0.5), q, d);
    CHECK(e.expected == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(e.bias == doctest::Approx(-0.25).epsilon(1e-14));
  }
  SUBCASE("never displayed") {
    CorrectionFunction f;
    f.set(DisplayContext::position(1), {0.0, 1.0});
    RelevanceTable rel = one(0.4);
    rel.set(q, ItemId("e"), 0.2);
    CHECK(code_of([&] { expected_estimate(AffineBehavior::uniform(1, 1, 0), policy, f, rel, q, ItemId("e")); }) ==
          ErrorCode::kNeverDisplayed);
  }
}

TEST_CASE("expected_estimate is affine in the click probability") {
  CorrectionFunction f;
  f.set(DisplayContext::position(1), {-0.3, 1.7});
  const auto policy = LoggingPolicy::deterministic(q, Ranking{"d"});
  const AffineBehavior identity = AffineBehavior::uniform(1, 1.0, 0.0);
  for (double p : {0.2, 0.65}) {
    const auto e = expected_estimate(identity, policy, f, one(p), q, d);
    CHECK(e.expected == doctest::Approx(p * (1.7 - -0.3) + -0.3).epsilon(1e-14));
  }
}

TEST_CASE("matched correction has zero bias over a grid") {
  LoggingPolicy policy;
  policy.add(q, Ranking{"d", "e", "g"}, 0.5);
  policy.add(q, Ranking{"g", "d", "e"}, 0.3);
  policy.add(q, Ranking{"e", "g", "d"}, 0.2);
  for (double alpha : {0.1, 0.3, 0.7, 1.0}) {
    for (double beta : {0.0, 0.1, 0.3, 0.9}) {
      if (alpha + beta > 1.0) continue;
      const AffineBehavior b({alpha, alpha * 0.9, alpha * 0.5}, {beta, beta * 0.5, 0.0});
      const auto f = to_correction_function(AffineCorrection::matched(b));
      for (double r : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        RelevanceTable rel;
        rel.set(q, d, r);
        rel.set(q, ItemId("e"), 0.3);
        rel.set(q, ItemId("g"), 0.8);
        CHECK(std::abs(expected_estimate(b, policy, f, rel, q, d).bias) <= 1e-12);
      }
    }
  }
}

TEST_CASE("Monte Carlo estimates agree with the closed form") {
  RelevanceTable rel;
  rel.set(q, ItemId("a"), 0.3);
  rel.set(q, ItemId("b"), 0.75);
  LoggingPolicy policy;
  policy.add(q, Ranking{"a", "b"}, 0.6);
  policy.add(q, Ranking{"b", "a"}, 0.4);
  const std::size_t n = 200000;

  auto check = [&](const BehaviorModel& b, const CorrectionFunction& f) {
    const auto log = simulate_log(b, rel, policy, q, n, 17);
    const auto ctx = log_contexts(b, rel, log);
    const auto est = estimate_relevance(log, f, ctx);
    const auto se = estimate_standard_errors(log, f, ctx);
    for (const char* item : {"a", "b"}) {
      const double expected = expected_estimate(b, policy, f, rel, q, ItemId(item)).expected;
      CHECK(std::abs(est.at(ItemId(item)) - expected) <= 4.0 * se.at(ItemId(item)));
    }
  };
  const AffineBehavior affine({0.9, 0.4}, {0.05, 0.1});
  check(affine, to_correction_function(AffineCorrection::matched(affine)));
  check(affine, to_correction_function(apply_clipping(AffineCorrection::matched(affine, FixedClip{0.6}), n)));
  check(CascadeBehavior{}, exposure_ips_correction(CascadeBehavior{}, rel, policy, q));
}

TEST_CASE("naive_ctr examples") {
  CHECK(naive_ctr(single_item_log({1, 0, 0, 0})).at(d) == 0.25);
  CHECK(naive_ctr(single_item_log({0, 0})).at(d) == 0.0);
  ClickLog log(q);
  log.append(Impression(q, 0, Ranking{"d"}, {1}));
  log.append(Impression(q, 1, Ranking{"e"}, {0}));
  log.append(Impression(q, 2, Ranking{"d"}, {0}));
  log.append(Impression(q, 3, Ranking{"e"}, {0}));
  CHECK(naive_ctr(log).at(d) == 0.5);
  CHECK(code_of([] { naive_ctr(ClickLog(q)); }) == ErrorCode::kEmptyLog);
}

TEST_CASE("clipping") {
  CHECK(apply_clipping(AffineCorrection{{0.05}, {0.0}, FixedClip{0.1}}, 1).alpha_hat[0] == 0.1);
  CHECK(clip_threshold(AdaptiveClip{1.0}, 100) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(apply_clipping(AffineCorrection{{0.5}, {0.2}, FixedClip{0.1}}, 1).alpha_hat[0] == 0.5);
  CHECK(apply_clipping(AffineCorrection{{0.5}, {0.2}, FixedClip{0.1}}, 1).beta_hat[0] == 0.2);
  CHECK(clip_threshold(AdaptiveClip{1.0}, 1) == 1.0);
  CHECK(clip_threshold(NoClip{}, 10) == 0.0);
  double last = 2.0;
  for (std::size_t n : {1u, 4u, 100u, 10000u, 1000000u}) {
    const double tau = clip_threshold(AdaptiveClip{1.0}, n);
    CHECK(tau <= last);
    last = tau;
  }
  CHECK(last == doctest::Approx(1e-3));
}

TEST_CASE("fixed clipping above alpha shrinks f1 and grows the bias") {
  const AffineBehavior b = AffineBehavior::uniform(1, 0.05, 0.0);
  const auto policy = LoggingPolicy::deterministic(q, Ranking{"d"});
  double last_f1 = INFINITY;
  double last_bias = 0.0;
  for (double tau : {0.0, 0.06, 0.1, 0.3}) {
    const auto corr = apply_clipping(AffineCorrection::matched(b, FixedClip{tau}), 1);
    const auto f = to_correction_function(corr);
    const double f1 = std::abs(f.at("pos:1").f1);
    const double bias = std::abs(expected_estimate(b, policy, f, one(0.5), q, d).bias);
    CHECK(f1 <= last_f1);
    CHECK(bias >= last_bias - 1e-15);
    last_f1 = f1;
    last_bias = bias;
  }
}

TEST_CASE("adaptive clipping bias vanishes once tau(N) < alpha") {
  const AffineBehavior b = AffineBehavior::uniform(1, 0.05, 0.0);
  const auto policy = LoggingPolicy::deterministic(q, Ranking{"d"});
  const auto base = AffineCorrection::matched(b, AdaptiveClip{1.0});
  std::vector<double> bias;
  for (std::size_t n : {100u, 1000u, 10000u, 1000000u}) {
    const auto f = to_correction_function(apply_clipping(base, n));
    bias.push_back(std::abs(expected_estimate(b, policy, f, one(0.5), q, d).bias));
  }
  CHECK(bias[0] == doctest::Approx(0.25).epsilon(1e-14));
  for (std::size_t i = 1; i < bias.size(); ++i) CHECK(bias[i] <= 1e-12);
}

TEST_CASE("estimated ranking quality") {
  RelevanceEstimate est;
  est.values[ItemId("A")] = 0.9;
  est.values[ItemId("B")] = 0.4;
  CHECK(estimate_ranking_quality(est, Ranking{"A", "B"}, RankWeights::dcg()) == doctest::Approx(1.15237).epsilon(1e-5));
  RelevanceTable rel;
  rel.set(q, ItemId("A"), 0.9);
  rel.set(q, ItemId("B"), 0.4);
  CHECK(estimate_ranking_quality(est, Ranking{"A", "B"}, RankWeights::dcg()) ==
        ranking_quality(Ranking{"A", "B"}, RankWeights::dcg(), rel, q));
  RelevanceEstimate big;
  big.values[ItemId("A")] = 1.5;
  CHECK(estimate_ranking_quality(big, Ranking{"A"}, RankWeights::explicit_weights({1.0})) == 1.5);
  CHECK(code_of([&] { estimate_ranking_quality(big, Ranking{"A", "C"}, RankWeights::dcg()); }) ==
        ErrorCode::kMissingEstimate);
}

TEST_CASE("estimate CSV") {
  RelevanceEstimate est;
  est.values[ItemId("A")] = 0.5;
  est.n_used = 4;
  std::ostringstream out;
  write_estimate_csv(out, est);
  CHECK(out.str() == "item_id,estimate,n_used\nA,0.5,4\n");
}

TEST_CASE("solve_unbiased_correction examples") {
  SUBCASE("affine behavior, one context") {
    std::vector<ContextObservations> s{{DisplayContext::position(1), {}}};
    for (double r : {0.1, 0.5, 0.9}) s[0].points.push_back({r, 0.8 * r + 0.1});
    const auto res = solve_unbiased_correction(s);
    CHECK(res.feasible);
    CHECK(res.max_residual <= 1e-10);
    const auto& f = res.f.at("pos:1");
    CHECK(f.f0 == doctest::Approx(-0.125).epsilon(1e-12));
    CHECK(f.f1 == doctest::Approx(1.125).epsilon(1e-12));
    for (const auto& p : s[0].points) CHECK(std::abs(p.click_prob * (f.f1 - f.f0) + f.f0 - p.relevance) <= 1e-12);
  }
  SUBCASE("plackett-luce with a shared context") {
    std::vector<ContextObservations> s{{DisplayContext::choice_set(0.01), {}}};
    std::vector<std::pair<double, double>> rp;
    for (double r : {0.1, 0.5, 0.9}) {
      s[0].points.push_back({r, r / (r + 0.01)});
      rp.emplace_back(r, r / (r + 0.01));
    }
    const auto res = solve_unbiased_correction(s);
    CHECK_FALSE(res.feasible);
    CHECK(res.max_residual > 0.01);
    CHECK(res.max_residual == doctest::Approx(ls_residual(rp)).epsilon(1e-9));
  }
  SUBCASE("a single item is always solvable") {
    std::vector<ContextObservations> s{{DisplayContext::exposure(0.4), {{0.3, 0.12}}}};
    const auto res = solve_unbiased_correction(s);
    CHECK(res.feasible);
    CHECK(res.max_residual == 0.0);
  }
  SUBCASE("empty") { CHECK(code_of([] { solve_unbiased_correction({}); }) == ErrorCode::kEmptyScenario); }
}

TEST_CASE("affine and cascade scenarios are always feasible") {
  RandomStream rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    RelevanceTable rel;
    std::vector<ItemId> items;
    for (int i = 0; i < 5; ++i) {
      items.emplace_back("i" + std::to_string(i));
      rel.set(q, items.back(), rng.uniform());
    }
    std::vector<double> a(3);
    std::vector<double> b(3);
    for (int k = 0; k < 3; ++k) {
      a[k] = 0.05 + 0.95 * rng.uniform();
      b[k] = rng.uniform() * (1.0 - a[k]);
    }
    for (const BehaviorModel& m : {BehaviorModel(AffineBehavior(a, b)), BehaviorModel(CascadeBehavior{})}) {
      std::map<std::string, ContextObservations> by_key;
      for (int y = 0; y < 6; ++y) {
        std::vector<ItemId> pick;
        for (int k = 0; k < 3; ++k) pick.push_back(items[(y + 2 * k + (y / 3)) % 5]);
        const Ranking ranking(pick);
        const auto probs = click_probs(m, rel, q, ranking);
        const auto ctx = exposure_contexts(m, rel, q, ranking);
        for (int k = 0; k < 3; ++k) {
          auto [it, fresh] = by_key.try_emplace(ctx[k].key(), ContextObservations{ctx[k], {}});
          it->second.points.push_back({rel.at(q, pick[k]), probs[k]});
        }
      }
      std::vector<ContextObservations> s;
      for (auto& [key, obs] : by_key) s.push_back(obs);
      CHECK(solve_unbiased_correction(s).max_residual <= 1e-10);
    }
  }
}

TEST_CASE("in-expectation solve under a stochastic policy") {
  // One item shown at rank 1 or 2 of an affine behavior: a single equation
  // in four unknowns is always solvable.
  std::vector<ItemExposures> items{{d, 0.4, {{"pos:1", 0.5, 0.9 * 0.4 + 0.05}, {"pos:2", 0.5, 0.5 * 0.4}}}};
  CHECK(solve_unbiased_correction_in_expectation(items).feasible);
  // Items sharing the same exposure mix must share one correction.
  std::vector<ItemExposures> pl;
  for (double r : {0.1, 0.5, 0.9}) {
    pl.push_back({ItemId("x" + std::to_string(static_cast<int>(r * 10))), r, {{"mass:0.01", 1.0, r / (r + 0.01)}}});
  }
  const auto res = solve_unbiased_correction_in_expectation(pl);
  CHECK_FALSE(res.feasible);
  CHECK(res.max_residual > 0.01);
}
