/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/harness/curves.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <ostream>

#include "clicklab/error.hpp"

namespace clicklab {

std::string_view curve_family_name(CurveFamily family) {
  switch (family) {
    case CurveFamily::kPlackettLuce:
      return "plackett_luce";
    case CurveFamily::kCascade:
      return "cascade";
    case CurveFamily::kAffine:
      return "affine";
  }
  return "unknown";
}

CurveFamily parse_curve_family(std::string_view name) {
  if (name == "plackett_luce") return CurveFamily::kPlackettLuce;
  if (name == "cascade") return CurveFamily::kCascade;
  if (name == "affine") return CurveFamily::kAffine;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown curve family '{}'", name));
}

std::vector<double> uniform_grid(std::size_t points) {
  if (points < 2) throw Error(ErrorCode::kInvalidArgument, "a grid needs at least 2 points");
  std::vector<double> grid(points);
  const double last = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = static_cast<double>(i) / last;
  return grid;
}

std::vector<CurvePoint> curve_points(const CurveSpec& spec, std::span<const double> grid) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  switch (spec.family) {
    case CurveFamily::kPlackettLuce:
      if (!(spec.other_mass > 0.0)) {
        throw Error(ErrorCode::kDegenerateChoiceSet, "other-item mass S must be positive");
      }
      break;
    case CurveFamily::kCascade:
      if (!in_unit(spec.kappa)) throw Error(ErrorCode::kInvalidProbability, "kappa must lie in [0,1]");
      break;
    case CurveFamily::kAffine:
      if (!in_unit(spec.alpha) || !in_unit(spec.beta) || spec.alpha + spec.beta > 1.0 + 1e-12) {
        throw Error(ErrorCode::kInvalidProbability, "need alpha, beta in [0,1] with alpha + beta <= 1");
      }
      break;
  }
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (double r : grid) {
    if (!in_unit(r)) throw Error(ErrorCode::kInvalidProbability, fmt::format("grid relevance {} outside [0,1]", r));
    double p = 0.0;
    switch (spec.family) {
      case CurveFamily::kPlackettLuce:
        p = r / (r + spec.other_mass);
        break;
      case CurveFamily::kCascade:
        p = spec.kappa * r;
        break;
      case CurveFamily::kAffine:
        p = spec.alpha * r + spec.beta;
        break;
    }
    out.push_back(CurvePoint{r, p});
  }
  return out;
}

void write_curves_csv(std::ostream& out, const CurveSpec& spec, std::span<const CurvePoint> points) {
  out << "family,relevance,click_prob\n";
  const auto name = curve_family_name(spec.family);
  for (const auto& p : points) fmt::print(out, "{},{},{}\n", name, p.relevance, p.click_prob);
}

std::size_t emit_curves(const CurveSpec& spec, std::span<const double> grid, const std::string& path) {
  const auto points = curve_points(spec, grid);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write curves to " + path);
  write_curves_csv(out, spec, points);
  if (!out) throw Error(ErrorCode::kIo, "write to " + path + " failed");
  return points.size();
}

}  // namespace clicklab
