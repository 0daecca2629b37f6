#pragma once

// Deliberately naive, quadratic re-implementation of the evaluation contract,
// written independently of eval.hpp as a reference for equivalence tests.
// Everything is recomputed from scratch with linear scans; no data structure
// or helper is shared with the optimized evaluator (only the contract types).
// Guarded to tiny instances: this is for tests, not for use.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "norcal/core.hpp"
#include "norcal/eval.hpp"  // contract types only: EvalConfig, MetricsReport

namespace norcal::synth {

namespace oracle_detail {

// Ranking relation: higher score first, then ascending
// (image_id, proposal_id, class_id).
inline bool ranks_before(const DetectionTuple& a, const DetectionTuple& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  if (a.proposal_id != b.proposal_id) return a.proposal_id < b.proposal_id;
  return a.class_id < b.class_id;
}

// Insertion sort into ranking order.
inline std::vector<DetectionTuple> rank(std::vector<DetectionTuple> v) {
  for (size_t i = 1; i < v.size(); ++i) {
    DetectionTuple t = v[i];
    size_t j = i;
    while (j > 0 && ranks_before(t, v[j - 1])) {
      v[j] = v[j - 1];
      --j;
    }
    v[j] = t;
  }
  return v;
}

inline double corner_iou(const Box& a, const Box& b) {
  const double ax2 = a.x + a.w, ay2 = a.y + a.h;
  const double bx2 = b.x + b.w, by2 = b.y + b.h;
  const double x1 = a.x > b.x ? a.x : b.x;
  const double y1 = a.y > b.y ? a.y : b.y;
  const double x2 = ax2 < bx2 ? ax2 : bx2;
  const double y2 = ay2 < by2 ? ay2 : by2;
  double iw = x2 - x1;
  if (iw < 0.0) iw = 0.0;
  double ih = y2 - y1;
  if (ih < 0.0) ih = 0.0;
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

}  // namespace oracle_detail

// Same contract as eval::evaluate, recomputed the slow way.
inline eval::MetricsReport oracle_evaluate(const std::vector<DetectionTuple>& tuples,
                                           const GroundTruthSet& gt, const ClassTable& table,
                                           const eval::EvalConfig& cfg) {
  if (gt.images.size() > 10 || tuples.size() > 50)
    throw ConfigError("oracle instance too large (<= 10 images, <= 50 tuples)");
  cfg.validate();

  // Cap: walk every group in ranking order and keep the first `limit`.
  std::vector<DetectionTuple> ranked = oracle_detail::rank(tuples);
  std::vector<DetectionTuple> capped;
  for (size_t i = 0; i < ranked.size(); ++i) {
    long seen = 0;
    for (size_t j = 0; j < i; ++j) {
      const bool same_group = cfg.cap.mode == eval::DetectionCap::Mode::per_image
                                  ? ranked[j].image_id == ranked[i].image_id
                                  : ranked[j].class_id == ranked[i].class_id;
      if (same_group) ++seen;
    }
    if (seen < cfg.cap.limit) capped.push_back(ranked[i]);
  }

  eval::MetricsReport report;
  double ap_sum_overall = 0.0, ar_sum_overall = 0.0;
  long n_overall = 0;
  double ap_sum_b[3] = {0, 0, 0}, ar_sum_b[3] = {0, 0, 0};
  long n_b[3] = {0, 0, 0};

  for (const ClassEntry& entry : table.entries()) {
    const int class_id = entry.class_id;
    eval::PerClassMetrics pc;

    std::vector<DetectionTuple> dets;  // ranking order preserved from `capped`
    for (const DetectionTuple& t : capped)
      if (t.class_id == class_id) dets.push_back(t);
    pc.n_det = static_cast<long>(dets.size());

    std::vector<Annotation> gts;
    for (const Annotation& a : gt.annotations)
      if (a.class_id == class_id) gts.push_back(a);
    for (const Annotation& a : gts)
      if (!a.ignore) ++pc.n_gt;

    if (pc.n_gt > 0) {
      double ap_sum = 0.0, ar_sum = 0.0;
      for (size_t ti = 0; ti < cfg.iou_thresholds.size(); ++ti) {
        const double thr = cfg.iou_thresholds[ti];

        // Greedy matching, per image, detections in ranking order.
        // outcome: 1 = TP, 0 = FP, -1 = ignored.
        std::vector<int> outcome(dets.size(), 0);
        std::vector<bool> gt_taken(gts.size(), false);
        for (size_t d = 0; d < dets.size(); ++d) {
          double best = -1.0;
          size_t pick = gts.size();
          for (size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g] || gts[g].ignore) continue;
            if (gts[g].image_id != dets[d].image_id) continue;
            const double iou = oracle_detail::corner_iou(dets[d].box, gts[g].box);
            if (iou >= thr && iou > best) {
              best = iou;
              pick = g;
            }
          }
          if (pick < gts.size()) {
            gt_taken[pick] = true;
            outcome[d] = 1;
            continue;
          }
          best = -1.0;
          for (size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g] || !gts[g].ignore) continue;
            if (gts[g].image_id != dets[d].image_id) continue;
            const double iou = oracle_detail::corner_iou(dets[d].box, gts[g].box);
            if (iou >= thr && iou > best) {
              best = iou;
              pick = g;
            }
          }
          if (pick < gts.size()) {
            gt_taken[pick] = true;
            outcome[d] = -1;
          }
        }

        // PR points over the counted (non-ignored) detections, each point
        // recomputed from scratch.
        std::vector<double> precision, recall;
        for (size_t d = 0; d < dets.size(); ++d) {
          if (outcome[d] == -1) continue;
          long tp = 0, total = 0;
          for (size_t e = 0; e <= d; ++e) {
            if (outcome[e] == -1) continue;
            ++total;
            if (outcome[e] == 1) ++tp;
          }
          recall.push_back(static_cast<double>(tp) / static_cast<double>(pc.n_gt));
          precision.push_back(static_cast<double>(tp) / static_cast<double>(total));
        }

        double ap = 0.0;
        if (!precision.empty()) {
          for (int j = 0; j < cfg.recall_points; ++j) {
            const double r = static_cast<double>(j) / static_cast<double>(cfg.recall_points - 1);
            double best_p = 0.0;
            bool reachable = false;
            for (size_t i = 0; i < recall.size(); ++i) {
              if (recall[i] >= r) {
                reachable = true;
                if (precision[i] > best_p) best_p = precision[i];
              }
            }
            if (reachable) ap += best_p;
          }
          ap /= static_cast<double>(cfg.recall_points);
        }
        ap_sum += ap;

        long matched = 0;
        for (size_t g = 0; g < gts.size(); ++g)
          if (gt_taken[g] && !gts[g].ignore) ++matched;
        ar_sum += static_cast<double>(matched) / static_cast<double>(pc.n_gt);
      }
      pc.ap = ap_sum / static_cast<double>(cfg.iou_thresholds.size());
      pc.ar = ar_sum / static_cast<double>(cfg.iou_thresholds.size());

      ap_sum_overall += *pc.ap;
      ar_sum_overall += *pc.ar;
      ++n_overall;
      int b = -1;
      if (entry.n_images >= 1 && entry.n_images <= table.thresholds().rare_max) b = 0;
      else if (entry.n_images > table.thresholds().rare_max &&
               entry.n_images <= table.thresholds().common_max) b = 1;
      else if (entry.n_images > table.thresholds().common_max) b = 2;
      if (b >= 0) {
        ap_sum_b[b] += *pc.ap;
        ar_sum_b[b] += *pc.ar;
        ++n_b[b];
      }
    }
    report.per_class[class_id] = pc;
  }

  if (n_overall) {
    report.ap_overall = ap_sum_overall / static_cast<double>(n_overall);
    report.ar_overall = ar_sum_overall / static_cast<double>(n_overall);
  }
  if (n_b[0]) {
    report.ap_rare = ap_sum_b[0] / static_cast<double>(n_b[0]);
    report.ar_rare = ar_sum_b[0] / static_cast<double>(n_b[0]);
  }
  if (n_b[1]) {
    report.ap_common = ap_sum_b[1] / static_cast<double>(n_b[1]);
    report.ar_common = ar_sum_b[1] / static_cast<double>(n_b[1]);
  }
  if (n_b[2]) {
    report.ap_frequent = ap_sum_b[2] / static_cast<double>(n_b[2]);
    report.ar_frequent = ar_sum_b[2] / static_cast<double>(n_b[2]);
  }
  return report;
}

}  // namespace norcal::synth
