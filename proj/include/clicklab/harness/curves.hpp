/**
 * Copyright (c) 2026, clicklab contributors
 */
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clicklab {

enum class CurveFamily { kPlackettLuce, kCascade, kAffine };

/// Click probability as a function of relevance with the display context
/// held fixed: R / (R + S), kappa * R, or alpha * R + beta.
struct CurveSpec {
  CurveFamily family = CurveFamily::kPlackettLuce;
  double other_mass = 0.01;
  double kappa = 0.7;
  double alpha = 1.0;
  double beta = 0.0;
};

struct CurvePoint {
  double relevance = 0.0;
  double click_prob = 0.0;
};

std::string_view curve_family_name(CurveFamily family);
CurveFamily parse_curve_family(std::string_view name);

/// `points` evenly spaced relevances from 0 to 1 inclusive.
std::vector<double> uniform_grid(std::size_t points);

std::vector<CurvePoint> curve_points(const CurveSpec& spec, std::span<const double> grid);

/// CSV: family,relevance,click_prob; one row per grid value.
void write_curves_csv(std::ostream& out, const CurveSpec& spec, std::span<const CurvePoint> points);

/// Writes the CSV to `path`.  Throws kIo when the file cannot be written.
std::size_t emit_curves(const CurveSpec& spec, std::span<const double> grid, const std::string& path);

}  // namespace clicklab
