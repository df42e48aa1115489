/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/harness/report.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <ostream>

namespace clicklab {

bool VerificationReport::pass() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

const ReportRow* VerificationReport::find(const std::string& row_claim, const std::string& item) const {
  for (const auto& row : rows) {
    if (row.claim == row_claim && row.item == item) return &row;
  }
  return nullptr;
}

double z_score(double mean, double target, double se) {
  const double diff = mean - target;
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

void write_report_csv(std::ostream& out, const VerificationReport& report) {
  out << "claim,item,mean,se,z,pass\n";
  for (const auto& r : report.rows) {
    fmt::print(out, "{},{},{},{},{},{}\n", r.claim, r.item, r.mean, r.se, r.z, r.pass ? "true" : "false");
  }
}

void write_report_json(std::ostream& out, const VerificationReport& report) {
  nlohmann::ordered_json j;
  j["claim"] = report.claim;
  j["seed"] = report.seed;
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["pass"] = report.pass();
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["claim"] = r.claim;
    row["item"] = r.item;
    row["mean"] = r.mean;
    row["se"] = r.se;
    // JSON has no infinity; keep the sign readable.
    if (std::isfinite(r.z)) {
      row["z"] = r.z;
    } else {
      row["z"] = r.z > 0 ? "inf" : "-inf";
    }
    row["pass"] = r.pass;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["notes"] = report.notes;
  out << j.dump(2) << '\n';
}

void write_report_text(std::ostream& out, const VerificationReport& report) {
  for (const auto& r : report.rows) {
    fmt::print(out, "{} {} {} mean={:.9g} se={:.3g} z={:.3g}\n", r.pass ? "PASS" : "FAIL", r.claim, r.item, r.mean,
               r.se, r.z);
  }
  for (const auto& note : report.notes) fmt::print(out, "note: {}\n", note);
  fmt::print(out, "{}: {}\n", report.claim, report.pass() ? "PASS" : "FAIL");
}

}  // namespace clicklab
