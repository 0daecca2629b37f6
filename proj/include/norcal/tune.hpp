#pragma once

// Gamma sweep on training-split data: for each grid point, calibrate the dump
// and evaluate against the training annotations, then pick the gamma that
// maximizes the objective. Gamma 0 is always force-included so the sweep can
// never select something worse than no calibration on its own split.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "norcal/calib.hpp"
#include "norcal/core.hpp"
#include "norcal/eval.hpp"

namespace norcal::tune {

struct SweepObjective {
  enum class Kind { ap_overall, ap_rare, weighted };
  Kind kind = Kind::ap_overall;
  double w_rare = 1.0, w_common = 1.0, w_frequent = 1.0;  // weighted kind only

  double value(const eval::MetricsReport& r) const {
    switch (kind) {
      case Kind::ap_overall: return r.ap_overall.value_or(0.0);
      case Kind::ap_rare: return r.ap_rare.value_or(0.0);
      case Kind::weighted:
        return w_rare * r.ap_rare.value_or(0.0) + w_common * r.ap_common.value_or(0.0) +
               w_frequent * r.ap_frequent.value_or(0.0);
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case Kind::ap_overall: return "ap_overall";
      case Kind::ap_rare: return "ap_rare";
      case Kind::weighted:
        return "weighted:" + std::to_string(w_rare) + "," + std::to_string(w_common) + "," +
               std::to_string(w_frequent);
    }
    return "ap_overall";
  }
};

struct SweepResult {
  std::vector<double> grid;                // ascending, gamma 0 included
  std::vector<eval::MetricsReport> curve;  // curve[i] is the report at grid[i]
  double best_gamma = 0.0;
  SweepObjective objective;

  const eval::MetricsReport& report_at(double gamma) const {
    for (size_t i = 0; i < grid.size(); ++i)
      if (grid[i] == gamma) return curve[i];
    throw InternalError("gamma not in sweep grid");
  }
  const eval::MetricsReport& best_report() const { return report_at(best_gamma); }
  const eval::MetricsReport& baseline_report() const { return report_at(0.0); }
};

// Default grids: 0.05 spacing, up to 1.5 for CDT and below 1 for ENS.
inline std::vector<double> default_grid(FactorKind kind) {
  std::vector<double> g;
  const int steps = kind == FactorKind::ens ? 19 : 30;
  for (int i = 0; i <= steps; ++i) g.push_back(0.05 * i);
  return g;
}

namespace detail {

// Seeded uniform subsample of the training images plus the matching slices
// of annotations and proposals.
inline void subset_split(const GroundTruthSet& gt, const std::vector<ProposalLogits>& dump,
                         long subset_size, uint64_t seed, GroundTruthSet& sub_gt,
                         std::vector<ProposalLogits>& sub_dump) {
  std::vector<long> ids;
  ids.reserve(gt.images.size());
  for (const ImageInfo& im : gt.images) ids.push_back(im.image_id);
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::min<size_t>(ids.size(), static_cast<size_t>(subset_size)));
  std::unordered_set<long> keep(ids.begin(), ids.end());

  sub_gt.categories = gt.categories;
  for (const ImageInfo& im : gt.images)
    if (keep.count(im.image_id)) sub_gt.images.push_back(im);
  for (const Annotation& a : gt.annotations)
    if (keep.count(a.image_id)) sub_gt.annotations.push_back(a);
  for (const ProposalLogits& p : dump)
    if (keep.count(p.image_id)) sub_dump.push_back(p);
}

}  // namespace detail

inline SweepResult sweep_gamma(const std::vector<ProposalLogits>& dump,
                               const GroundTruthSet& gt_train, const ClassTable& table,
                               const CalibrationConfig& base_cfg, std::vector<double> grid,
                               const eval::EvalConfig& eval_cfg,
                               std::optional<long> subset_size = std::nullopt,
                               uint64_t seed = 0, SweepObjective objective = {}) {
  if (grid.empty()) throw ConfigError("sweep grid must be non-empty");
  const FactorKind kind = base_cfg.factor.kind;
  if (kind != FactorKind::cdt && kind != FactorKind::ens)
    throw ConfigError("sweep requires a cdt or ens factor family");
  for (size_t i = 0; i < grid.size(); ++i) {
    const double g = grid[i];
    const bool ok = kind == FactorKind::cdt ? (g >= 0.0 && std::isfinite(g))
                                            : (g >= 0.0 && g < 1.0);
    if (!ok)
      throw ConfigError("invalid gamma " + std::to_string(g) + " at grid index " +
                        std::to_string(i) + " for factor " + std::string(to_string(kind)));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() != 0.0) grid.insert(grid.begin(), 0.0);

  GroundTruthSet sub_gt;
  std::vector<ProposalLogits> sub_dump;
  const long subset_n = subset_size.value_or(0);
  if (subset_size && subset_n < 1) throw ConfigError("subset size must be >= 1");
  const bool use_subset =
      subset_n >= 1 && subset_n < static_cast<long>(gt_train.images.size());
  if (use_subset) detail::subset_split(gt_train, dump, subset_n, seed, sub_gt, sub_dump);
  const GroundTruthSet& split_gt = use_subset ? sub_gt : gt_train;
  const std::vector<ProposalLogits>& split_dump = use_subset ? sub_dump : dump;

  SweepResult result;
  result.grid = grid;
  result.objective = objective;
  result.curve.reserve(grid.size());
  double best_value = -std::numeric_limits<double>::infinity();
  for (double gamma : grid) {
    CalibrationConfig cfg = base_cfg;
    cfg.factor.gamma = gamma;
    const std::vector<DetectionTuple> tuples = calib::calibrate_dataset(split_dump, table, cfg);
    eval::MetricsReport report = eval::evaluate(tuples, split_gt, table, eval_cfg);
    const double value = objective.value(report);
    if (value > best_value) {
      best_value = value;
      result.best_gamma = gamma;
    }
    result.curve.push_back(std::move(report));
  }
  return result;
}

}  // namespace norcal::tune
