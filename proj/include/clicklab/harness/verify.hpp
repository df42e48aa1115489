/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "clicklab/clickfit.hpp"
#include "clicklab/harness/report.hpp"
#include "clicklab/harness/scenario.hpp"

namespace clicklab {

inline constexpr double kZThreshold = 4.0;

/// Monte Carlo check that the estimator's mean over `replications` logs of
/// size n matches the true relevance (claim "unbiased") and the closed-form
/// expectation (claim "closed_form").  Requires replications >= 30 and
/// n >= 1000 (kPrecondition).
VerificationReport run_unbiasedness_test(const Scenario& scenario, std::size_t n, std::size_t replications,
                                         std::uint64_t seed, std::size_t workers = 1);

std::vector<std::size_t> default_consistency_schedule();

/// One stream per query, estimated on growing prefixes.  Each point must lie
/// within max(4 SE, 1e-3) of the closed-form expectation at that size, and
/// the standard error must not grow along the schedule.  Requires a strictly
/// increasing schedule reaching at least 10^6 (kPrecondition).
VerificationReport run_consistency_test(const Scenario& scenario, std::span<const std::size_t> schedule,
                                        std::uint64_t seed, std::size_t workers = 1);

/// Exact (context, R, P) triples from the scenario's behavior, solved for an
/// unbiased correction.  Deterministic policies use per-context regression,
/// stochastic ones the joint in-expectation system.
VerificationReport run_feasibility_demo(const Scenario& scenario);

/// Built-in feasibility scenarios: "affine", "cascade", "plackett_luce".
Scenario feasibility_scenario(std::string_view family);

struct Scenario61Options {
  bool extended = false;   // add the ranking [C, D, A, B]
  bool perturbed = false;  // click probability of A at rank 1 moved from 0.90 to 0.91
  FitConfig config;
};

/// The two-ranking PBM example: closed-form peeling, multi-start fitting,
/// constraint checks and identifiability flags.
VerificationReport run_scenario_61(const Scenario61Options& options = {});

/// The exact click data behind run_scenario_61.
ExactClickData scenario_61_data(bool extended = false, bool perturbed = false);

/// Pairwise-ratio assumption at every rank of the scenario's rankings.
VerificationReport run_pairwise_check(const Scenario& scenario);

}  // namespace clicklab
