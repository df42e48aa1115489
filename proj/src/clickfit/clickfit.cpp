/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/clickfit.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "clicklab/parallel.hpp"
#include "clicklab/random.hpp"

namespace clicklab {

// ParametricClickModel

ParametricClickModel::ParametricClickModel(ClickModelKind kind, std::vector<ItemId> items, std::size_t ranks)
    : kind_(kind), items_(std::move(items)), ranks_(ranks) {
  if (ranks_ == 0) throw Error(ErrorCode::kInvalidArgument, "a click model needs at least one rank");
  if (items_.empty()) throw Error(ErrorCode::kInvalidArgument, "a click model needs at least one item");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!item_index_.emplace(items_[i], i).second) {
      throw Error(ErrorCode::kDuplicateItem, "item '" + items_[i].str() + "' listed twice in a click model");
    }
  }
  values_.assign(2 * ranks_ + items_.size(), 0.5);
  for (std::size_t k = 1; k <= ranks_; ++k) values_[beta_index(k)] = 0.0;
}

ParametricClickModel ParametricClickModel::pbm(std::vector<ItemId> items, std::size_t ranks) {
  ParametricClickModel m(ClickModelKind::kPbm, std::move(items), ranks);
  m.anchors_[m.alpha_index(1)] = 1.0;
  for (std::size_t k = 1; k <= ranks; ++k) m.anchors_[m.beta_index(k)] = 0.0;
  m.project(m.values_);
  return m;
}

ParametricClickModel ParametricClickModel::affine(std::vector<ItemId> items, std::size_t ranks) {
  ParametricClickModel m(ClickModelKind::kAffine, std::move(items), ranks);
  m.anchors_[m.alpha_index(1)] = 1.0;
  m.anchors_[m.beta_index(1)] = 0.0;
  m.project(m.values_);
  return m;
}

std::size_t ParametricClickModel::alpha_index(std::size_t rank) const {
  if (rank == 0 || rank > ranks_) throw Error(ErrorCode::kModelCoverage, fmt::format("model has no rank {}", rank));
  return rank - 1;
}

std::size_t ParametricClickModel::beta_index(std::size_t rank) const { return ranks_ + alpha_index(rank); }

std::optional<std::size_t> ParametricClickModel::find_item(const ItemId& item) const {
  auto it = item_index_.find(item);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ParametricClickModel::relevance_index(const ItemId& item) const {
  auto idx = find_item(item);
  if (!idx) throw Error(ErrorCode::kModelCoverage, "model has no relevance for item " + item.str());
  return 2 * ranks_ + *idx;
}

std::string ParametricClickModel::parameter_name(std::size_t index) const {
  if (index < ranks_) return fmt::format("alpha_{}", index + 1);
  if (index < 2 * ranks_) return fmt::format("beta_{}", index - ranks_ + 1);
  return "R_" + items_.at(index - 2 * ranks_).str();
}

std::vector<std::string> ParametricClickModel::parameter_names() const {
  std::vector<std::string> names;
  names.reserve(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) names.push_back(parameter_name(i));
  return names;
}

std::size_t ParametricClickModel::parameter_index(const std::string& name) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (parameter_name(i) == name) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown click-model parameter '" + name + "'");
}

void ParametricClickModel::set_parameters(const std::vector<double>& values) {
  if (values.size() != values_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("expected {} parameters, got {}", values_.size(), values.size()));
  }
  values_ = values;
  project(values_);
}

void ParametricClickModel::set(const std::string& name, double value) {
  values_[parameter_index(name)] = value;
  project(values_);
}

void ParametricClickModel::anchor(const std::string& name, double value) {
  const auto idx = parameter_index(name);
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, fmt::format("anchor {}={} outside [0,1]", name, value));
  }
  anchors_[idx] = value;
  project(values_);
}

void ParametricClickModel::release(const std::string& name) {
  const auto idx = parameter_index(name);
  if (kind_ == ClickModelKind::kPbm && idx >= ranks_ && idx < 2 * ranks_) {
    throw Error(ErrorCode::kInvalidArgument, "PBM trust-bias parameters stay frozen at zero");
  }
  anchors_.erase(idx);
}

void ParametricClickModel::project(std::vector<double>& values) const {
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  for (const auto& [idx, value] : anchors_) values[idx] = value;
  if (kind_ != ClickModelKind::kAffine) return;
  for (std::size_t k = 0; k < ranks_; ++k) {
    double& a = values[k];
    double& b = values[ranks_ + k];
    const double excess = a + b - 1.0;
    if (excess <= 0.0) continue;
    const bool a_fixed = anchors_.contains(k);
    const bool b_fixed = anchors_.contains(ranks_ + k);
    if (a_fixed && !b_fixed) {
      b = std::max(0.0, 1.0 - a);
    } else if (b_fixed && !a_fixed) {
      a = std::max(0.0, 1.0 - b);
    } else if (!a_fixed && !b_fixed) {
      a -= excess / 2.0;
      b -= excess / 2.0;
    }
  }
}

// Data

ExactClickData exact_click_data(const BehaviorModel& behavior, const LoggingPolicy& policy, const RelevanceTable& rel,
                                const QueryId& query) {
  ExactClickData data;
  for (const auto& entry : policy.entries(query)) {
    if (entry.probability == 0.0) continue;
    data.push_back(ExactRanking{entry.ranking, entry.probability, click_probs(behavior, rel, query, entry.ranking)});
  }
  return data;
}

ClickStatistics ClickStatistics::from_log(const ClickLog& log) {
  if (log.empty()) throw Error(ErrorCode::kEmptyLog, "click log of query " + log.query().str() + " is empty");
  std::map<std::pair<ItemId, std::size_t>, std::pair<std::size_t, std::size_t>> counts;  // displays, clicks
  for (const auto& imp : log.impressions()) {
    for (std::size_t k = 0; k < imp.ranking.size(); ++k) {
      auto& c = counts[{imp.ranking.items()[k], k + 1}];
      c.first += 1;
      c.second += imp.clicks[k];
    }
  }
  ClickStatistics stats;
  const double n = static_cast<double>(log.size());
  for (const auto& [key, c] : counts) {
    stats.cells_.push_back(ClickCell{key.first, key.second, static_cast<double>(c.first) / n,
                                     static_cast<double>(c.second) / static_cast<double>(c.first)});
    stats.max_rank_ = std::max(stats.max_rank_, key.second);
  }
  return stats;
}

ClickStatistics ClickStatistics::from_exact(const ExactClickData& data) {
  std::map<std::pair<ItemId, std::size_t>, std::pair<double, double>> acc;  // weight, weighted rate
  for (const auto& entry : data) {
    if (entry.click_probs.size() != entry.ranking.size()) {
      throw Error(ErrorCode::kInvalidArgument, "exact click data needs one probability per ranked item");
    }
    for (std::size_t k = 0; k < entry.ranking.size(); ++k) {
      const double p = entry.click_probs[k];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::kInvalidProbability, fmt::format("click probability {} outside [0,1]", p));
      }
      auto& a = acc[{entry.ranking.items()[k], k + 1}];
      a.first += entry.weight;
      a.second += entry.weight * p;
    }
  }
  ClickStatistics stats;
  for (const auto& [key, a] : acc) {
    if (a.first <= 0.0) continue;
    stats.cells_.push_back(ClickCell{key.first, key.second, a.first, a.second / a.first});
    stats.max_rank_ = std::max(stats.max_rank_, key.second);
  }
  return stats;
}

// Loss

namespace {

struct ResolvedCell {
  std::size_t item;
  std::size_t rank;
  double weight;
  double rate;
};

std::vector<ResolvedCell> resolve(const ParametricClickModel& model, const ClickStatistics& stats) {
  std::vector<ResolvedCell> out;
  out.reserve(stats.cells().size());
  for (const auto& cell : stats.cells()) {
    auto idx = model.find_item(cell.item);
    if (!idx) throw Error(ErrorCode::kModelCoverage, "model does not cover item " + cell.item.str());
    if (cell.rank > model.ranks()) {
      throw Error(ErrorCode::kModelCoverage, fmt::format("model does not cover rank {}", cell.rank));
    }
    out.push_back(ResolvedCell{*idx, cell.rank, cell.weight, cell.click_rate});
  }
  return out;
}

double loss_at(const std::vector<ResolvedCell>& cells, const std::vector<double>& x, std::size_t ranks,
               std::size_t items, double eps) {
  double total = 0.0;
  for (const auto& c : cells) {
    const double p = std::clamp(x[c.rank - 1] * x[2 * ranks + c.item] + x[ranks + c.rank - 1], eps, 1.0 - eps);
    total -= c.weight * (c.rate * std::log(p) + (1.0 - c.rate) * std::log1p(-p));
  }
  return total / static_cast<double>(items);
}

// loss(y) - loss(x) summed per cell as log ratios.  Near a minimum the two
// losses agree to far below their own rounding, so subtracting them loses
// the progress; each per-cell difference keeps full relative precision.
double loss_change(const std::vector<ResolvedCell>& cells, const std::vector<double>& x, const std::vector<double>& y,
                   std::size_t ranks, std::size_t items, double eps) {
  double total = 0.0;
  for (const auto& c : cells) {
    const std::size_t ia = c.rank - 1;
    const std::size_t ib = ranks + c.rank - 1;
    const std::size_t ir = 2 * ranks + c.item;
    const double raw_p = x[ia] * x[ir] + x[ib];
    const double raw_q = y[ia] * y[ir] + y[ib];
    const double p = std::clamp(raw_p, eps, 1.0 - eps);
    const double q = std::clamp(raw_q, eps, 1.0 - eps);
    // From parameter differences, which are exact for nearby values.
    const bool interior = p == raw_p && q == raw_q;
    const double d = interior ? y[ia] * (y[ir] - x[ir]) + (y[ia] - x[ia]) * x[ir] + (y[ib] - x[ib]) : q - p;
    if (c.rate > 0.0) total -= c.weight * c.rate * std::log1p(d / p);
    if (c.rate < 1.0) total -= c.weight * (1.0 - c.rate) * std::log1p(-d / (1.0 - p));
  }
  return total / static_cast<double>(items);
}

void gradient_at(const std::vector<ResolvedCell>& cells, const std::vector<double>& x, std::size_t ranks,
                 std::size_t items, double eps, std::vector<double>& grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double scale = 1.0 / static_cast<double>(items);
  for (const auto& c : cells) {
    const std::size_t ia = c.rank - 1;
    const std::size_t ib = ranks + c.rank - 1;
    const std::size_t ir = 2 * ranks + c.item;
    const double raw = x[ia] * x[ir] + x[ib];
    if (raw < eps || raw > 1.0 - eps) continue;  // clamped: flat
    const double dp = -scale * c.weight * (c.rate - raw) / (raw * (1.0 - raw));
    grad[ia] += dp * x[ir];
    grad[ib] += dp;
    grad[ir] += dp * x[ia];
  }
}

}  // namespace

double nll_loss(const ParametricClickModel& model, const ClickStatistics& stats, double eps) {
  const auto cells = resolve(model, stats);
  return loss_at(cells, model.parameters(), model.ranks(), model.items().size(), eps);
}

double nll_loss(const ParametricClickModel& model, const ClickLog& log, double eps) {
  return nll_loss(model, ClickStatistics::from_log(log), eps);
}

std::vector<double> nll_gradient(const ParametricClickModel& model, const ClickStatistics& stats, double eps) {
  const auto cells = resolve(model, stats);
  std::vector<double> grad(model.parameter_count());
  gradient_at(cells, model.parameters(), model.ranks(), model.items().size(), eps, grad);
  return grad;
}

double expected_nll(const ParametricClickModel& model, const BehaviorModel& behavior, const LoggingPolicy& policy,
                    const RelevanceTable& rel, const QueryId& query, double eps) {
  return nll_loss(model, ClickStatistics::from_exact(exact_click_data(behavior, policy, rel, query)), eps);
}

// Fitting

FitResult fit(const ParametricClickModel& model, const ClickStatistics& stats, const FitConfig& config) {
  if (!(config.epsilon > 0.0 && config.epsilon < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "log clamp epsilon must lie in (0, 0.5)");
  }
  if (!(config.step_size > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step size must be positive");

  const auto cells = resolve(model, stats);
  const std::size_t ranks = model.ranks();
  const std::size_t items = model.items().size();
  const std::size_t dim = model.parameter_count();
  std::vector<double> x = model.parameters();
  model.project(x);
  if (!std::isfinite(loss_at(cells, x, ranks, items, config.epsilon))) {
    throw Error(ErrorCode::kFitDiverged, "non-finite loss at iteration 0");
  }

  std::vector<double> grad(dim);
  std::vector<double> trial(dim);
  double step = config.step_size;
  bool converged = false;
  std::size_t it = 0;
  for (; it < config.max_iterations; ++it) {
    gradient_at(cells, x, ranks, items, config.epsilon, grad);
    for (const auto& [idx, value] : model.anchors()) grad[idx] = 0.0;

    // Projected-gradient norm: distance moved by a unit projected step.
    for (std::size_t i = 0; i < dim; ++i) trial[i] = x[i] - grad[i];
    model.project(trial);
    double pg = 0.0;
    for (std::size_t i = 0; i < dim; ++i) pg = std::max(pg, std::abs(trial[i] - x[i]));
    if (pg <= config.gradient_tolerance) {
      converged = true;
      break;
    }

    bool accepted = false;
    while (step > 1e-20) {
      for (std::size_t i = 0; i < dim; ++i) trial[i] = x[i] - step * grad[i];
      model.project(trial);
      const double change = loss_change(cells, x, trial, ranks, items, config.epsilon);
      if (!std::isfinite(change)) {
        throw Error(ErrorCode::kFitDiverged, fmt::format("non-finite loss at iteration {}", it + 1));
      }
      double linear = 0.0;
      double sq = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = trial[i] - x[i];
        linear += grad[i] * d;
        sq += d * d;
      }
      if (sq == 0.0) break;  // the step no longer moves x
      // Sufficient decrease for a projected step.
      if (change <= linear + sq / (2.0 * step)) {
        accepted = true;
        x.swap(trial);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stalled
    step = std::min(step * 2.0, config.step_size);
  }

  FitResult result{model, loss_at(cells, x, ranks, items, config.epsilon), converged, it};
  result.model.set_parameters(x);
  return result;
}

FitResult fit(const ParametricClickModel& model, const ClickLog& log, const FitConfig& config) {
  return fit(model, ClickStatistics::from_log(log), config);
}

FitResult fit(const ParametricClickModel& model, const ExactClickData& data, const FitConfig& config) {
  return fit(model, ClickStatistics::from_exact(data), config);
}

// Closed form

std::string ParameterConstraint::to_string() const {
  if (kind == Kind::kRatio) return fmt::format("{} = {:.3f} * {}", lhs, coefficient, rhs);
  return fmt::format("{} * {} = {:.3f}", lhs, rhs, coefficient);
}

double ParameterConstraint::violation(const std::map<std::string, double>& values) const {
  const double l = values.at(lhs);
  const double r = values.at(rhs);
  if (kind == Kind::kRatio) return std::abs(l - coefficient * r);
  return std::abs(l * r - coefficient);
}

namespace {

struct Equation {
  std::size_t rank;
  ItemId item;
  double prob;
};

std::string alpha_name(std::size_t rank) { return fmt::format("alpha_{}", rank); }
std::string relevance_name(const ItemId& item) { return "R_" + item.str(); }

}  // namespace

ClosedFormSolution closed_form_pbm(const ExactClickData& data, double tolerance) {
  // Merge duplicate cells, insisting they agree.
  std::map<std::pair<std::size_t, ItemId>, double> cells;
  for (const auto& entry : data) {
    if (entry.click_probs.size() != entry.ranking.size()) {
      throw Error(ErrorCode::kInvalidArgument, "exact click data needs one probability per ranked item");
    }
    for (std::size_t k = 0; k < entry.ranking.size(); ++k) {
      const auto key = std::make_pair(k + 1, entry.ranking.items()[k]);
      const double p = entry.click_probs[k];
      auto [it, inserted] = cells.emplace(key, p);
      if (!inserted && std::abs(it->second - p) > tolerance) {
        throw Error(ErrorCode::kInconsistent,
                    fmt::format("{} * {} is both {} and {}", alpha_name(k + 1), relevance_name(key.second),
                                it->second, p));
      }
    }
  }
  std::vector<Equation> eqs;
  for (const auto& [key, p] : cells) eqs.push_back(Equation{key.first, key.second, p});

  std::map<std::size_t, double> alpha{{1, 1.0}};
  std::map<ItemId, double> rel;

  auto check = [&](const Equation& e) {
    const double predicted = alpha.at(e.rank) * rel.at(e.item);
    if (std::abs(predicted - e.prob) > tolerance) {
      throw Error(ErrorCode::kInconsistent,
                  fmt::format("{} * {} = {} but the data says {}", alpha_name(e.rank), relevance_name(e.item),
                              predicted, e.prob));
    }
  };
  auto check_range = [&](const std::string& name, double value) {
    if (value > 1.0 + tolerance) {
      throw Error(ErrorCode::kInconsistent, fmt::format("{} would be {} > 1", name, value));
    }
  };

  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& e : eqs) {
      const bool a_known = alpha.contains(e.rank);
      const bool r_known = rel.contains(e.item);
      if (a_known && r_known) {
        check(e);
      } else if (a_known && alpha.at(e.rank) > 0.0) {
        rel[e.item] = e.prob / alpha.at(e.rank);
        check_range(relevance_name(e.item), rel[e.item]);
        progress = true;
      } else if (r_known && rel.at(e.item) > 0.0) {
        alpha[e.rank] = e.prob / rel.at(e.item);
        check_range(alpha_name(e.rank), alpha[e.rank]);
        progress = true;
      } else if ((a_known || r_known) && e.prob > tolerance) {
        throw Error(ErrorCode::kInconsistent,
                    fmt::format("{} * {} = {} with a zero factor", alpha_name(e.rank), relevance_name(e.item), e.prob));
      }
    }
  }

  ClosedFormSolution solution;
  for (const auto& [rank, value] : alpha) {
    if (rank != 1) solution.determined[alpha_name(rank)] = value;
  }
  for (const auto& [item, value] : rel) solution.determined[relevance_name(item)] = value;

  // What remains: connected components of unknown alphas and relevances.
  // Inside a component R_x = r_x * s and alpha_k = a_k / s for one free scale s.
  std::vector<Equation> open;
  for (const auto& e : eqs) {
    if (!alpha.contains(e.rank) && !rel.contains(e.item)) open.push_back(e);
  }
  std::set<std::size_t> seen_alpha;
  std::set<ItemId> seen_rel;
  for (const auto& seed : open) {
    if (seen_alpha.contains(seed.rank)) continue;
    if (seed.prob <= tolerance) {
      solution.constraints.push_back(
          {ParameterConstraint::Kind::kProduct, alpha_name(seed.rank), relevance_name(seed.item), 0.0});
      continue;
    }
    std::map<std::size_t, double> a_rel;
    std::map<ItemId, double> r_rel;
    r_rel[seed.item] = 1.0;
    seen_rel.insert(seed.item);
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& e : open) {
        if (e.prob <= tolerance) continue;
        const bool has_a = a_rel.contains(e.rank);
        const bool has_r = r_rel.contains(e.item);
        if (has_a && has_r) {
          const double predicted = a_rel.at(e.rank) * r_rel.at(e.item);
          if (std::abs(predicted - e.prob) > tolerance * std::max(1.0, e.prob)) {
            throw Error(ErrorCode::kInconsistent,
                        fmt::format("{} * {} = {} is incompatible with the other rankings", alpha_name(e.rank),
                                    relevance_name(e.item), e.prob));
          }
        } else if (has_r) {
          a_rel[e.rank] = e.prob / r_rel.at(e.item);
          grew = true;
        } else if (has_a) {
          r_rel[e.item] = e.prob / a_rel.at(e.rank);
          grew = true;
        }
      }
    }
    for (const auto& [rank, v] : a_rel) seen_alpha.insert(rank);
    for (const auto& [item, v] : r_rel) seen_rel.insert(item);

    // References: the smallest relevance and the smallest alpha, so every
    // ratio coefficient is >= 1.
    auto r_ref = std::min_element(r_rel.begin(), r_rel.end(),
                                  [](const auto& x, const auto& y) { return x.second < y.second; });
    auto a_ref = std::min_element(a_rel.begin(), a_rel.end(),
                                  [](const auto& x, const auto& y) { return x.second < y.second; });
    for (const auto& [item, v] : r_rel) {
      if (item == r_ref->first) continue;
      solution.constraints.push_back({ParameterConstraint::Kind::kRatio, relevance_name(item),
                                      relevance_name(r_ref->first), v / r_ref->second});
    }
    for (const auto& [rank, v] : a_rel) {
      if (rank == a_ref->first) continue;
      solution.constraints.push_back(
          {ParameterConstraint::Kind::kRatio, alpha_name(rank), alpha_name(a_ref->first), v / a_ref->second});
    }
    solution.constraints.push_back({ParameterConstraint::Kind::kProduct, alpha_name(a_ref->first),
                                    relevance_name(r_ref->first), a_ref->second * r_ref->second});
  }
  return solution;
}

// Identifiability

std::size_t SolutionSet::index(const std::string& name) const {
  auto it = std::find(parameter_names.begin(), parameter_names.end(), name);
  if (it == parameter_names.end()) throw Error(ErrorCode::kInvalidArgument, "unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - parameter_names.begin());
}

std::map<std::string, double> SolutionSet::values(std::size_t solution) const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < parameter_names.size(); ++i) out[parameter_names[i]] = solutions.at(solution)[i];
  return out;
}

SolutionSet identifiability_probe(const ParametricClickModel& model, const ClickStatistics& stats,
                                  const FitConfig& config) {
  if (config.restarts < 2) throw Error(ErrorCode::kPrecondition, "identifiability probe needs at least 2 restarts");

  std::vector<std::optional<FitResult>> runs(config.restarts);
  parallel_for(config.restarts, config.workers, [&](std::size_t r) {
    RandomStream rng(derive_seed(config.seed, r, 0x1d));
    ParametricClickModel start = model;
    auto values = start.parameters();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!start.is_anchored(i)) values[i] = rng.uniform(0.05, 0.95);
    }
    start.set_parameters(values);
    try {
      auto result = fit(start, stats, config);
      if (result.converged) runs[r] = std::move(result);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kFitDiverged) throw;
    }
  });

  SolutionSet set;
  set.parameter_names = model.parameter_names();
  set.total_restarts = config.restarts;
  set.best_loss = std::numeric_limits<double>::infinity();
  for (const auto& run : runs) {
    if (!run) continue;
    ++set.converged_restarts;
    set.best_loss = std::min(set.best_loss, run->loss);
  }
  if (set.converged_restarts == 0) {
    throw Error(ErrorCode::kNoConvergence, fmt::format("none of {} restarts converged", config.restarts));
  }

  for (const auto& run : runs) {
    if (!run || run->loss > set.best_loss + SolutionSet::kLossTolerance) continue;
    const auto& params = run->model.parameters();
    set.solutions.push_back(params);
    bool placed = false;
    for (auto& cluster : set.clusters) {
      double dist = 0.0;
      for (std::size_t i = 0; i < params.size(); ++i) {
        dist = std::max(dist, std::abs(params[i] - cluster.parameters[i]));
      }
      if (dist <= SolutionSet::kClusterRadius) {
        ++cluster.members;
        cluster.loss = std::min(cluster.loss, run->loss);
        placed = true;
        break;
      }
    }
    if (!placed) set.clusters.push_back(SolutionCluster{params, 1, run->loss});
  }
  std::stable_sort(set.clusters.begin(), set.clusters.end(),
                   [](const auto& a, const auto& b) { return a.loss < b.loss; });

  set.spread.assign(set.parameter_names.size(), 0.0);
  for (std::size_t i = 0; i < set.spread.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& cluster : set.clusters) {
      lo = std::min(lo, cluster.parameters[i]);
      hi = std::max(hi, cluster.parameters[i]);
    }
    set.spread[i] = hi - lo;
  }
  return set;
}

bool CmProbeReport::all_pass() const {
  return std::all_of(items.begin(), items.end(), [](const auto& i) { return i.pass; });
}

CmProbeReport unbiasedness_probe_cm(const ParametricClickModel& model, const BehaviorModel& behavior,
                                    const LoggingPolicy& policy, const RelevanceTable& rel, const QueryId& query,
                                    std::size_t n, std::size_t replications, const FitConfig& config,
                                    std::uint64_t seed) {
  if (replications < 30) throw Error(ErrorCode::kPrecondition, "unbiasedness probe needs at least 30 replications");
  if (n == 0) throw Error(ErrorCode::kPrecondition, "unbiasedness probe needs N >= 1");

  std::vector<std::vector<double>> fitted(replications);
  std::vector<bool> ok(replications, false);
  parallel_for(replications, config.workers, [&](std::size_t r) {
    const auto log = simulate_log(behavior, rel, policy, query, n, derive_seed(seed, r, 0x2a));
    auto result = fit(model, ClickStatistics::from_log(log), config);
    ok[r] = result.converged;
    for (const auto& item : model.items()) fitted[r].push_back(result.model.relevance(item));
  });
  for (std::size_t r = 0; r < replications; ++r) {
    if (!ok[r]) throw Error(ErrorCode::kNoConvergence, fmt::format("replication {} did not converge", r));
  }

  CmProbeReport report;
  report.n = n;
  report.replications = replications;
  const double reps = static_cast<double>(replications);
  for (std::size_t i = 0; i < model.items().size(); ++i) {
    CmProbeItem row;
    row.item = model.items()[i];
    row.truth = rel.at(query, row.item);
    for (const auto& f : fitted) row.mean += f[i];
    row.mean /= reps;
    double ss = 0.0;
    for (const auto& f : fitted) ss += (f[i] - row.mean) * (f[i] - row.mean);
    row.stddev = std::sqrt(ss / (reps - 1.0));
    row.se = row.stddev / std::sqrt(reps);
    const double diff = row.mean - row.truth;
    row.z = row.se > 0.0 ? diff / row.se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    row.pass = std::abs(row.z) <= 4.0;
    report.items.push_back(row);
  }
  return report;
}

void write_fit_report_csv(std::ostream& out, const SolutionSet& solutions) {
  out << "parameter,value,identified,spread\n";
  const auto& best = solutions.clusters.front().parameters;
  for (std::size_t i = 0; i < solutions.parameter_names.size(); ++i) {
    fmt::print(out, "{},{},{},{}\n", solutions.parameter_names[i], best[i],
               solutions.spread[i] <= SolutionSet::kClusterRadius ? "true" : "false", solutions.spread[i]);
  }
}

void write_constraints(std::ostream& out, const ClosedFormSolution& solution) {
  for (const auto& c : solution.constraints) out << c.to_string() << '\n';
}

}  // namespace clicklab
