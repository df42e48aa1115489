/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace clicklab {

struct ReportRow {
  std::string claim;
  std::string item;
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
};

/// Outcome of one verification run.  Pass flags come only from the stated
/// thresholds.  Wall time is kept in memory but never serialized, so the
/// written report is byte-identical for a fixed seed.
struct VerificationReport {
  std::string claim;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t replications = 0;
  std::vector<ReportRow> rows;
  std::vector<std::string> notes;
  double wall_seconds = 0.0;

  bool pass() const;
  const ReportRow* find(const std::string& claim, const std::string& item) const;
};

/// z = (mean - target) / se; 0 when both agree exactly, +-inf when se = 0.
double z_score(double mean, double target, double se);

/// CSV: claim,item,mean,se,z,pass.
void write_report_csv(std::ostream& out, const VerificationReport& report);
/// JSON mirroring the CSV rows plus claim, seed, n, replications, pass, notes.
void write_report_json(std::ostream& out, const VerificationReport& report);
/// "PASS|FAIL claim item mean=.. se=.. z=.." lines followed by notes.
void write_report_text(std::ostream& out, const VerificationReport& report);

}  // namespace clicklab
