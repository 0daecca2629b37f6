#pragma once

// Detection metrics: IoU matching, capped AP (per-image K), AP-Fixed
// (per-class cap), bucketed AP_r/AP_c/AP_f, AR, and per-class reports.
//
// Matching is COCO-style greedy with 101-point interpolated AP over 10 IoU
// thresholds. All iteration orders are pinned (ascending class id, ascending
// threshold index, recall levels left to right) so results are bit-identical
// across runs and comparable against the brute-force oracle.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "norcal/core.hpp"

namespace norcal::eval {

inline std::vector<double> default_iou_thresholds() {
  std::vector<double> t(10);
  for (int i = 0; i < 10; ++i) t[i] = 0.5 + 0.05 * i;
  return t;
}

// Per-image cap K (the standard protocol, default 300) or the AP-Fixed
// per-class dataset-wide cap M (default 10000).
struct DetectionCap {
  enum class Mode { per_image, per_class_fixed };
  Mode mode = Mode::per_image;
  long limit = 300;

  static DetectionCap per_image(long k = 300) { return {Mode::per_image, k}; }
  static DetectionCap per_class_fixed(long m = 10000) { return {Mode::per_class_fixed, m}; }
};

struct EvalConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  DetectionCap cap;
  int recall_points = 101;

  void validate() const {
    if (iou_thresholds.empty()) throw ConfigError("iou_thresholds must be non-empty");
    double prev = 0.0;
    for (double t : iou_thresholds) {
      if (!(t > 0.0) || t > 1.0) throw ConfigError("iou thresholds must lie in (0, 1]");
      if (t <= prev) throw ConfigError("iou thresholds must be strictly increasing");
      prev = t;
    }
    if (cap.limit < 1) throw ConfigError("detection cap must be >= 1");
    if (recall_points < 2) throw ConfigError("recall_points must be >= 2");
  }
};

struct PerClassMetrics {
  std::optional<double> ap;  // undefined when the class has no ground truth
  std::optional<double> ar;
  long n_gt = 0;   // non-ignored ground-truth instances
  long n_det = 0;  // detections surviving the cap
};

struct MetricsReport {
  std::optional<double> ap_overall, ap_rare, ap_common, ap_frequent;
  std::optional<double> ar_overall, ar_rare, ar_common, ar_frequent;
  std::map<int, PerClassMetrics> per_class;
};

// Intersection over union of two [x, y, w, h] boxes. Degenerate input
// (zero-area union) yields 0.
inline double box_iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

namespace detail {

// Ranking order everywhere: higher score first, ties broken by
// (image_id, proposal-order, class_id) ascending.
inline bool score_rank_less(const DetectionTuple& a, const DetectionTuple& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  if (a.proposal_id != b.proposal_id) return a.proposal_id < b.proposal_id;
  return a.class_id < b.class_id;
}

inline bool canonical_less(const DetectionTuple& a, const DetectionTuple& b) {
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  if (a.proposal_id != b.proposal_id) return a.proposal_id < b.proposal_id;
  return a.class_id < b.class_id;
}

}  // namespace detail

// Keeps the top-limit tuples per image (per_image mode) or per class across
// the whole dataset (per_class_fixed mode). Output is in canonical
// (image_id, proposal_id, class_id) order.
inline std::vector<DetectionTuple> apply_cap(const std::vector<DetectionTuple>& tuples,
                                             const EvalConfig& cfg) {
  cfg.validate();
  std::unordered_map<long, std::vector<size_t>> groups;
  for (size_t i = 0; i < tuples.size(); ++i) {
    const long key = cfg.cap.mode == DetectionCap::Mode::per_image
                         ? tuples[i].image_id
                         : static_cast<long>(tuples[i].class_id);
    groups[key].push_back(i);
  }
  std::vector<DetectionTuple> out;
  out.reserve(tuples.size());
  const size_t limit = static_cast<size_t>(cfg.cap.limit);
  for (auto& [key, idx] : groups) {
    (void)key;
    if (idx.size() > limit) {
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return detail::score_rank_less(tuples[a], tuples[b]);
      });
      idx.resize(limit);
    }
    for (size_t i : idx) out.push_back(tuples[i]);
  }
  std::sort(out.begin(), out.end(), detail::canonical_less);
  return out;
}

enum class MatchOutcome { true_positive, false_positive, ignored };

namespace detail {

// `ious[d][g]` between detection d and ground truth g, both in their
// caller-side orders. Shared by the per-threshold loop so IoUs are computed
// once per (class, image) pair.
inline std::vector<MatchOutcome> greedy_match_ious(const std::vector<std::vector<double>>& ious,
                                                   const std::vector<bool>& gt_ignore,
                                                   double iou_thr) {
  const size_t n_gt = gt_ignore.size();
  std::vector<bool> used(n_gt, false);
  std::vector<MatchOutcome> out(ious.size(), MatchOutcome::false_positive);
  for (size_t d = 0; d < ious.size(); ++d) {
    double best_iou = -1.0;
    size_t best = n_gt;
    for (size_t g = 0; g < n_gt; ++g) {
      if (used[g] || gt_ignore[g]) continue;
      const double iou = ious[d][g];
      if (iou >= iou_thr && iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < n_gt) {
      used[best] = true;
      out[d] = MatchOutcome::true_positive;
      continue;
    }
    best_iou = -1.0;
    for (size_t g = 0; g < n_gt; ++g) {
      if (used[g] || !gt_ignore[g]) continue;
      const double iou = ious[d][g];
      if (iou >= iou_thr && iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < n_gt) {
      used[best] = true;
      out[d] = MatchOutcome::ignored;
    }
  }
  return out;
}

inline std::vector<std::vector<double>> iou_matrix(const std::vector<DetectionTuple>& dets,
                                                   const std::vector<Annotation>& gts) {
  std::vector<std::vector<double>> ious(dets.size(), std::vector<double>(gts.size()));
  for (size_t d = 0; d < dets.size(); ++d)
    for (size_t g = 0; g < gts.size(); ++g) ious[d][g] = box_iou(dets[d].box, gts[g].box);
  return ious;
}

}  // namespace detail

// COCO-style greedy matching for one class in one image. `dets` must already
// be sorted by descending score (ranking order). Each detection takes the
// unmatched non-ignored ground truth with the highest IoU >= iou_thr; failing
// that, an unmatched ignored ground truth >= iou_thr marks it "ignored"
// (excluded from the PR curve); otherwise it is a false positive. Every
// ground truth is consumed at most once.
inline std::vector<MatchOutcome> greedy_match(const std::vector<DetectionTuple>& dets,
                                              const std::vector<Annotation>& gts,
                                              double iou_thr) {
  std::vector<bool> gt_ignore(gts.size());
  for (size_t g = 0; g < gts.size(); ++g) gt_ignore[g] = gts[g].ignore;
  return detail::greedy_match_ious(detail::iou_matrix(dets, gts), gt_ignore, iou_thr);
}

// 101-point interpolated AP for one class at one IoU threshold. `outcomes`
// must follow the dataset-wide ranking order for the class; ignored
// detections contribute nothing to the curve. Undefined when n_gt = 0.
inline std::optional<double> ap_from_matches(const std::vector<MatchOutcome>& outcomes,
                                             long n_gt, int recall_points = 101) {
  if (n_gt <= 0) return std::nullopt;
  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(outcomes.size());
  recall.reserve(outcomes.size());
  long tp = 0, fp = 0;
  for (MatchOutcome o : outcomes) {
    if (o == MatchOutcome::ignored) continue;
    if (o == MatchOutcome::true_positive) ++tp; else ++fp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  if (precision.empty()) return 0.0;
  for (size_t i = precision.size() - 1; i-- > 0;)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double sum = 0.0;
  size_t idx = 0;
  for (int j = 0; j < recall_points; ++j) {
    const double r = static_cast<double>(j) / static_cast<double>(recall_points - 1);
    while (idx < recall.size() && recall[idx] < r) ++idx;
    if (idx == recall.size()) break;  // no recall level >= r is ever reached again
    sum += precision[idx];
  }
  return sum / static_cast<double>(recall_points);
}

namespace detail {

struct Aggregate {
  double sum = 0.0;
  long n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> mean() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

}  // namespace detail

// Full metric evaluation: applies the cap, matches per (class, image, IoU
// threshold), and reports per-class AP/AR plus unweighted bucket and overall
// means over classes with ground truth. Classes whose training count is zero
// (unseen bucket) still contribute to the overall means but belong to no
// frequency bucket.
inline MetricsReport evaluate(const std::vector<DetectionTuple>& tuples,
                              const GroundTruthSet& gt, const ClassTable& table,
                              const EvalConfig& cfg) {
  cfg.validate();
  gt.validate();
  for (const DetectionTuple& t : tuples) {
    if (!table.contains(t.class_id))
      throw ValidationError("detection tuple references class " + std::to_string(t.class_id) +
                            " absent from the class table");
    if (!std::isfinite(t.score) || t.score < 0.0)
      throw ValidationError("detection tuple with invalid score for class " +
                            std::to_string(t.class_id));
  }
  for (const Annotation& a : gt.annotations) {
    if (!table.contains(a.class_id))
      throw ValidationError("annotation " + std::to_string(a.ann_id) + " references class " +
                            std::to_string(a.class_id) + " absent from the class table");
  }

  const std::vector<DetectionTuple> capped = apply_cap(tuples, cfg);

  // Group ground truth by class then image.
  std::unordered_map<int, std::unordered_map<long, std::vector<Annotation>>> gt_by_class;
  std::unordered_map<int, long> n_gt_by_class;
  for (const Annotation& a : gt.annotations) {
    gt_by_class[a.class_id][a.image_id].push_back(a);
    if (!a.ignore) ++n_gt_by_class[a.class_id];
  }

  // Group detections by class in dataset-wide ranking order.
  std::vector<size_t> order(capped.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (capped[a].class_id != capped[b].class_id) return capped[a].class_id < capped[b].class_id;
    return detail::score_rank_less(capped[a], capped[b]);
  });

  std::unordered_map<int, std::vector<size_t>> dets_by_class;
  for (size_t i : order) dets_by_class[capped[i].class_id].push_back(i);

  MetricsReport report;
  detail::Aggregate ap_overall, ap_rare, ap_common, ap_frequent;
  detail::Aggregate ar_overall, ar_rare, ar_common, ar_frequent;
  const int n_thr = static_cast<int>(cfg.iou_thresholds.size());

  for (const ClassEntry& entry : table.entries()) {
    const int class_id = entry.class_id;
    PerClassMetrics pc;
    pc.n_gt = n_gt_by_class.count(class_id) ? n_gt_by_class[class_id] : 0;

    static const std::vector<size_t> kEmpty;
    const std::vector<size_t>& det_idx =
        dets_by_class.count(class_id) ? dets_by_class[class_id] : kEmpty;
    pc.n_det = static_cast<long>(det_idx.size());

    if (pc.n_gt > 0) {
      // Per-image det groups preserve the global ranking order restricted to
      // the image, which is exactly the per-image score order matching needs.
      std::unordered_map<long, std::vector<DetectionTuple>> dets_by_image;
      std::unordered_map<long, std::vector<size_t>> positions_by_image;
      for (size_t k = 0; k < det_idx.size(); ++k) {
        const DetectionTuple& t = capped[det_idx[k]];
        dets_by_image[t.image_id].push_back(t);
        positions_by_image[t.image_id].push_back(k);
      }
      const auto& class_gt = gt_by_class[class_id];

      std::vector<std::vector<MatchOutcome>> outcomes(
          n_thr, std::vector<MatchOutcome>(det_idx.size(), MatchOutcome::false_positive));
      std::vector<long> tp_total(n_thr, 0);
      for (const auto& [image_id, dets] : dets_by_image) {
        auto git = class_gt.find(image_id);
        static const std::vector<Annotation> kNoGt;
        const std::vector<Annotation>& gts = git == class_gt.end() ? kNoGt : git->second;
        std::vector<bool> gt_ignore(gts.size());
        for (size_t g = 0; g < gts.size(); ++g) gt_ignore[g] = gts[g].ignore;
        const auto ious = detail::iou_matrix(dets, gts);
        const std::vector<size_t>& pos = positions_by_image[image_id];
        for (int ti = 0; ti < n_thr; ++ti) {
          const std::vector<MatchOutcome> m =
              detail::greedy_match_ious(ious, gt_ignore, cfg.iou_thresholds[ti]);
          for (size_t k = 0; k < m.size(); ++k) {
            outcomes[ti][pos[k]] = m[k];
            if (m[k] == MatchOutcome::true_positive) ++tp_total[ti];
          }
        }
      }
      double ap_sum = 0.0, ar_sum = 0.0;
      for (int ti = 0; ti < n_thr; ++ti) {
        ap_sum += ap_from_matches(outcomes[ti], pc.n_gt, cfg.recall_points).value();
        ar_sum += static_cast<double>(tp_total[ti]) / static_cast<double>(pc.n_gt);
      }
      pc.ap = ap_sum / static_cast<double>(n_thr);
      pc.ar = ar_sum / static_cast<double>(n_thr);
    }

    ap_overall.add(pc.ap);
    ar_overall.add(pc.ar);
    switch (table.bucket(class_id)) {
      case Bucket::rare: ap_rare.add(pc.ap); ar_rare.add(pc.ar); break;
      case Bucket::common: ap_common.add(pc.ap); ar_common.add(pc.ar); break;
      case Bucket::frequent: ap_frequent.add(pc.ap); ar_frequent.add(pc.ar); break;
      case Bucket::unseen: break;
    }
    report.per_class[class_id] = pc;
  }

  report.ap_overall = ap_overall.mean();
  report.ap_rare = ap_rare.mean();
  report.ap_common = ap_common.mean();
  report.ap_frequent = ap_frequent.mean();
  report.ar_overall = ar_overall.mean();
  report.ar_rare = ar_rare.mean();
  report.ar_common = ar_common.mean();
  report.ar_frequent = ar_frequent.mean();
  return report;
}

// Score-bias statistics. Bucket means: mean score of the top-k tuples per
// image, split by frequency bucket and normalized so the frequent-bucket
// mean is 1 (raw means are reported when no frequent tuples exist). Rare
// panel, over rare-class tuples in the same selection: their mean score and
// the mean highest score that some other rare / common / frequent class
// reaches on the same proposals (raw, unnormalized).
struct ScoreStatistics {
  std::optional<double> mean_rare, mean_common, mean_frequent;
  long n_rare = 0, n_common = 0, n_frequent = 0;
  bool normalized = false;

  std::optional<double> rare_mean_own;
  std::optional<double> rare_mean_other_rare;
  std::optional<double> rare_mean_best_common;
  std::optional<double> rare_mean_best_frequent;
  long n_rare_tuples = 0;
};

inline ScoreStatistics score_statistics(const std::vector<DetectionTuple>& tuples,
                                        const ClassTable& table, long top_k = 300) {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  for (const DetectionTuple& t : tuples) {
    if (!table.contains(t.class_id))
      throw ValidationError("detection tuple references class " + std::to_string(t.class_id) +
                            " absent from the class table");
  }

  EvalConfig cap_cfg;
  cap_cfg.cap = DetectionCap::per_image(top_k);
  const std::vector<DetectionTuple> selected = apply_cap(tuples, cap_cfg);

  ScoreStatistics stats;
  double sum_rare = 0.0, sum_common = 0.0, sum_frequent = 0.0;
  for (const DetectionTuple& t : selected) {
    switch (table.bucket(t.class_id)) {
      case Bucket::rare: sum_rare += t.score; ++stats.n_rare; break;
      case Bucket::common: sum_common += t.score; ++stats.n_common; break;
      case Bucket::frequent: sum_frequent += t.score; ++stats.n_frequent; break;
      case Bucket::unseen: break;
    }
  }
  if (stats.n_rare) stats.mean_rare = sum_rare / static_cast<double>(stats.n_rare);
  if (stats.n_common) stats.mean_common = sum_common / static_cast<double>(stats.n_common);
  if (stats.n_frequent) stats.mean_frequent = sum_frequent / static_cast<double>(stats.n_frequent);
  if (stats.mean_frequent && *stats.mean_frequent > 0.0) {
    const double norm = *stats.mean_frequent;
    if (stats.mean_rare) stats.mean_rare = *stats.mean_rare / norm;
    if (stats.mean_common) stats.mean_common = *stats.mean_common / norm;
    stats.mean_frequent = 1.0;
    stats.normalized = true;
  }

  // Cross-bucket panel: index the full tuple list by proposal.
  std::map<std::pair<long, long>, std::vector<const DetectionTuple*>> by_proposal;
  for (const DetectionTuple& t : tuples)
    by_proposal[{t.image_id, t.proposal_id}].push_back(&t);

  double own = 0.0, other_rare = 0.0, best_common = 0.0, best_frequent = 0.0;
  long n_other_rare = 0, n_best_common = 0, n_best_frequent = 0;
  for (const DetectionTuple& t : selected) {
    if (table.bucket(t.class_id) != Bucket::rare) continue;
    ++stats.n_rare_tuples;
    own += t.score;
    double max_rare = -1.0, max_common = -1.0, max_frequent = -1.0;
    for (const DetectionTuple* o : by_proposal[{t.image_id, t.proposal_id}]) {
      if (o->class_id == t.class_id) continue;
      switch (table.bucket(o->class_id)) {
        case Bucket::rare: max_rare = std::max(max_rare, o->score); break;
        case Bucket::common: max_common = std::max(max_common, o->score); break;
        case Bucket::frequent: max_frequent = std::max(max_frequent, o->score); break;
        case Bucket::unseen: break;
      }
    }
    if (max_rare >= 0.0) { other_rare += max_rare; ++n_other_rare; }
    if (max_common >= 0.0) { best_common += max_common; ++n_best_common; }
    if (max_frequent >= 0.0) { best_frequent += max_frequent; ++n_best_frequent; }
  }
  if (stats.n_rare_tuples)
    stats.rare_mean_own = own / static_cast<double>(stats.n_rare_tuples);
  if (n_other_rare) stats.rare_mean_other_rare = other_rare / static_cast<double>(n_other_rare);
  if (n_best_common) stats.rare_mean_best_common = best_common / static_cast<double>(n_best_common);
  if (n_best_frequent)
    stats.rare_mean_best_frequent = best_frequent / static_cast<double>(n_best_frequent);
  return stats;
}

}  // namespace norcal::eval
