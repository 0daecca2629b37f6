#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "norcal/eval.hpp"
#include "norcal/oracle.hpp"
#include "test_support.hpp"

using namespace norcal;
using test_support::table_with_counts;

namespace {

DetectionTuple det(long image_id, long proposal_id, int class_id, Box box, double score) {
  return DetectionTuple{image_id, proposal_id, class_id, box, score};
}

// A ground truth whose every annotation is matched by one exact, high-scored
// detection.
struct PerfectInstance {
  GroundTruthSet gt;
  std::vector<DetectionTuple> tuples;
};

PerfectInstance perfect_instance(const ClassTable& table) {
  PerfectInstance inst;
  inst.gt.images = {{1, 200, 200}, {2, 200, 200}};
  long ann_id = 0;
  for (const ClassEntry& e : table.entries()) {
    inst.gt.categories.push_back({e.class_id, e.name});
    for (long img = 1; img <= 2; ++img) {
      const Box box{10.0 * e.class_id, 20.0 * img, 30, 40};
      inst.gt.annotations.push_back({++ann_id, img, e.class_id, box, false});
      inst.tuples.push_back(det(img, ann_id, e.class_id, box, 0.9));
    }
  }
  return inst;
}

using test_support::random_tiny_instance;
using test_support::reports_exactly_equal;
using RandomInstance = test_support::TinyInstance;

}  // namespace

TEST_CASE("box_iou basics") {
  const Box a{0, 0, 10, 10};
  CHECK(eval::box_iou(a, a) == 1.0);
  CHECK(eval::box_iou(a, Box{20, 20, 5, 5}) == 0.0);
  CHECK(eval::box_iou(a, Box{5, 5, 10, 10}) == Catch::Approx(25.0 / 175.0).margin(1e-12));
  CHECK(eval::box_iou(Box{0, 0, 0, 0}, Box{0, 0, 0, 0}) == 0.0);
}

TEST_CASE("per-image cap keeps everything when under the limit") {
  eval::EvalConfig cfg;
  const auto tuples = {det(1, 0, 1, {0, 0, 5, 5}, 0.5), det(1, 1, 1, {0, 0, 5, 5}, 0.4)};
  CHECK(eval::apply_cap(tuples, cfg).size() == 2);
}

TEST_CASE("per-image cap drops the lowest-ranked tie deterministically") {
  eval::EvalConfig cfg;
  cfg.cap = eval::DetectionCap::per_image(300);
  std::vector<DetectionTuple> tuples;
  for (long p = 0; p < 301; ++p) tuples.push_back(det(1, p, 1, {0, 0, 5, 5}, 0.5));
  const auto kept = eval::apply_cap(tuples, cfg);
  REQUIRE(kept.size() == 300);
  // All scores tie; the largest tie-break key (proposal 300) is the one cut.
  for (const auto& t : kept) CHECK(t.proposal_id < 300);
}

TEST_CASE("per-class cap ranks across images") {
  eval::EvalConfig cfg;
  cfg.cap = eval::DetectionCap::per_class_fixed(1);
  const std::vector<DetectionTuple> tuples = {det(1, 0, 7, {0, 0, 5, 5}, 0.9),
                                              det(2, 0, 7, {0, 0, 5, 5}, 0.8)};
  const auto kept = eval::apply_cap(tuples, cfg);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].image_id == 1);
  CHECK(kept[0].score == 0.9);
}

TEST_CASE("cap limits are never exceeded") {
  std::mt19937_64 rng(5);
  const ClassTable table = table_with_counts({5, 50, 500});
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const RandomInstance inst = random_tiny_instance(seed, table);
    const auto kept = eval::apply_cap(inst.tuples, inst.cfg);
    std::map<long, long> per_image;
    std::map<int, long> per_class;
    for (const auto& t : kept) {
      ++per_image[t.image_id];
      ++per_class[t.class_id];
    }
    if (inst.cfg.cap.mode == eval::DetectionCap::Mode::per_image) {
      for (const auto& [img, n] : per_image) CHECK(n <= inst.cfg.cap.limit);
    } else {
      for (const auto& [cls, n] : per_class) CHECK(n <= inst.cfg.cap.limit);
    }
  }
}

TEST_CASE("greedy matching follows the COCO rules") {
  const Box box{0, 0, 10, 10};
  const std::vector<Annotation> one_gt = {{1, 1, 7, box, false}};

  SECTION("forced match is a TP") {
    const auto m = eval::greedy_match({det(1, 0, 7, {0, 0, 10, 9}, 0.9)}, one_gt, 0.5);
    REQUIRE(m.size() == 1);
    CHECK(m[0] == eval::MatchOutcome::true_positive);
  }
  SECTION("second detection on an exhausted GT is a FP") {
    const auto m = eval::greedy_match(
        {det(1, 0, 7, box, 0.9), det(1, 1, 7, {0, 0, 10, 9}, 0.8)}, one_gt, 0.5);
    CHECK(m[0] == eval::MatchOutcome::true_positive);
    CHECK(m[1] == eval::MatchOutcome::false_positive);
  }
  SECTION("overlap with only an ignored GT is neither TP nor FP") {
    const std::vector<Annotation> ignored = {{1, 1, 7, box, true}};
    const auto m = eval::greedy_match({det(1, 0, 7, {0, 0, 10, 8}, 0.9)}, ignored, 0.5);
    CHECK(m[0] == eval::MatchOutcome::ignored);
  }
  SECTION("non-ignored GTs are preferred over ignored ones") {
    const std::vector<Annotation> mixed = {{1, 1, 7, box, true}, {2, 1, 7, {1, 1, 10, 10}, false}};
    const auto m = eval::greedy_match({det(1, 0, 7, box, 0.9)}, mixed, 0.5);
    CHECK(m[0] == eval::MatchOutcome::true_positive);
  }
}

TEST_CASE("101-point AP on hand-checked curves") {
  using O = eval::MatchOutcome;
  CHECK(eval::ap_from_matches({O::true_positive}, 1).value() == 1.0);
  CHECK(eval::ap_from_matches({O::false_positive, O::true_positive}, 1).value() ==
        Catch::Approx(0.5).margin(1e-12));
  CHECK(eval::ap_from_matches({}, 1).value() == 0.0);
  CHECK_FALSE(eval::ap_from_matches({O::true_positive}, 0).has_value());
  // Ignored detections vanish from the curve entirely.
  CHECK(eval::ap_from_matches({O::ignored, O::true_positive}, 1).value() == 1.0);
}

TEST_CASE("perfect predictions score 1.0 everywhere") {
  const ClassTable table = table_with_counts({5, 50, 500});
  const PerfectInstance inst = perfect_instance(table);
  const auto report = eval::evaluate(inst.tuples, inst.gt, table, eval::EvalConfig{});
  CHECK(report.ap_overall.value() == 1.0);
  CHECK(report.ap_rare.value() == 1.0);
  CHECK(report.ap_common.value() == 1.0);
  CHECK(report.ap_frequent.value() == 1.0);
  CHECK(report.ar_overall.value() == 1.0);
  CHECK(report.ar_rare.value() == 1.0);
}

TEST_CASE("no detections means zero AP and AR") {
  const ClassTable table = table_with_counts({5, 50});
  PerfectInstance inst = perfect_instance(table);
  const auto report = eval::evaluate({}, inst.gt, table, eval::EvalConfig{});
  CHECK(report.ap_overall.value() == 0.0);
  CHECK(report.ar_overall.value() == 0.0);
  for (const auto& [class_id, pc] : report.per_class) {
    CHECK(pc.ap.value() == 0.0);
    CHECK(pc.n_det == 0);
  }
}

TEST_CASE("classes without ground truth are excluded from the means") {
  const ClassTable table = table_with_counts({5, 50});
  GroundTruthSet gt;
  gt.images = {{1, 100, 100}};
  gt.categories = {{1, "a"}, {2, "b"}};
  const Box box{0, 0, 10, 10};
  gt.annotations = {{1, 1, 1, box, false}};
  const auto report =
      eval::evaluate({det(1, 0, 1, box, 0.9), det(1, 1, 2, box, 0.8)}, gt, table,
                     eval::EvalConfig{});
  CHECK(report.per_class.at(1).ap.value() == 1.0);
  CHECK_FALSE(report.per_class.at(2).ap.has_value());
  CHECK(report.per_class.at(2).n_det == 1);
  CHECK(report.ap_overall.value() == 1.0);  // only class 1 is defined
  CHECK_FALSE(report.ap_common.has_value());
}

TEST_CASE("tuples referencing unknown classes are rejected") {
  const ClassTable table = table_with_counts({5});
  GroundTruthSet gt;
  gt.images = {{1, 100, 100}};
  gt.categories = {{1, "a"}};
  gt.annotations = {{1, 1, 1, {0, 0, 10, 10}, false}};
  CHECK_THROWS_AS(
      eval::evaluate({det(1, 0, 9, {0, 0, 10, 10}, 0.5)}, gt, table, eval::EvalConfig{}),
      ValidationError);
}

TEST_CASE("strictly increasing score transforms never change AP") {
  const ClassTable table = table_with_counts({5, 50, 500});
  for (uint64_t seed = 100; seed < 200; ++seed) {
    const RandomInstance inst = random_tiny_instance(seed, table);
    const auto base = eval::evaluate(inst.tuples, inst.gt, table, inst.cfg);
    std::vector<DetectionTuple> transformed = inst.tuples;
    for (auto& t : transformed) t.score = t.score * t.score * t.score + t.score;
    const auto after = eval::evaluate(transformed, inst.gt, table, inst.cfg);
    REQUIRE(reports_exactly_equal(base, after));
  }
}

TEST_CASE("evaluate agrees exactly with the brute-force oracle") {
  const ClassTable table = table_with_counts({5, 50, 500});
  for (uint64_t seed = 0; seed < 300; ++seed) {
    const RandomInstance inst = random_tiny_instance(seed, table);
    const auto fast = eval::evaluate(inst.tuples, inst.gt, table, inst.cfg);
    const auto slow = synth::oracle_evaluate(inst.tuples, inst.gt, table, inst.cfg);
    REQUIRE(reports_exactly_equal(fast, slow));
  }
}

TEST_CASE("oracle refuses big instances") {
  const ClassTable table = table_with_counts({5});
  GroundTruthSet gt;
  gt.categories = {{1, "a"}};
  for (long i = 1; i <= 11; ++i) gt.images.push_back({i, 10, 10});
  gt.annotations = {{1, 1, 1, {0, 0, 5, 5}, false}};
  CHECK_THROWS_AS(synth::oracle_evaluate({}, gt, table, eval::EvalConfig{}), ConfigError);
}

TEST_CASE("score statistics: equal scores normalize to one across buckets") {
  const ClassTable table = table_with_counts({5, 50, 500});
  std::vector<DetectionTuple> tuples;
  for (int c = 1; c <= 3; ++c) tuples.push_back(det(1, c, c, {0, 0, 5, 5}, 0.4));
  const auto stats = eval::score_statistics(tuples, table, 300);
  CHECK(stats.normalized);
  CHECK(stats.mean_rare.value() == Catch::Approx(1.0));
  CHECK(stats.mean_common.value() == Catch::Approx(1.0));
  CHECK(stats.mean_frequent.value() == Catch::Approx(1.0));
}

TEST_CASE("score statistics: single-bucket input leaves the others empty") {
  const ClassTable table = table_with_counts({5, 50, 500});
  const std::vector<DetectionTuple> tuples = {det(1, 0, 3, {0, 0, 5, 5}, 0.4)};
  const auto stats = eval::score_statistics(tuples, table, 300);
  CHECK_FALSE(stats.mean_rare.has_value());
  CHECK_FALSE(stats.mean_common.has_value());
  CHECK(stats.mean_frequent.value() == 1.0);
  CHECK(stats.n_rare_tuples == 0);
  CHECK_FALSE(stats.rare_mean_own.has_value());
}

TEST_CASE("score statistics: cross-bucket panel reads the same proposal") {
  const ClassTable table = table_with_counts({5, 50, 500});
  const std::vector<DetectionTuple> tuples = {
      det(1, 0, 1, {0, 0, 5, 5}, 0.2),   // rare tuple
      det(1, 0, 2, {0, 0, 5, 5}, 0.3),   // common, same proposal
      det(1, 0, 3, {0, 0, 5, 5}, 0.45),  // frequent, same proposal
      det(1, 1, 3, {0, 0, 5, 5}, 0.9),   // frequent, different proposal
  };
  const auto stats = eval::score_statistics(tuples, table, 300);
  REQUIRE(stats.n_rare_tuples == 1);
  CHECK(stats.rare_mean_own.value() == Catch::Approx(0.2));
  CHECK_FALSE(stats.rare_mean_other_rare.has_value());
  CHECK(stats.rare_mean_best_common.value() == Catch::Approx(0.3));
  CHECK(stats.rare_mean_best_frequent.value() == Catch::Approx(0.45));
}
