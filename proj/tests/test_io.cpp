#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "norcal/io.hpp"
#include "test_support.hpp"

using namespace norcal;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = test_support::scratch_dir("io");

std::string path_of(const std::string& name) { return (kDir / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GroundTruthSet minimal_gt() {
  GroundTruthSet gt;
  gt.images = {{1, 640, 480}};
  gt.categories = {{3, "cat"}};
  gt.annotations = {{1, 1, 3, {10, 20, 30, 40}, false}};
  return gt;
}

}  // namespace

TEST_CASE("minimal annotation file round-trips") {
  const std::string path = path_of("gt.json");
  io::save_ground_truth(minimal_gt(), path);
  const GroundTruthSet gt = io::load_ground_truth(path);
  REQUIRE(gt.images.size() == 1);
  REQUIRE(gt.annotations.size() == 1);
  REQUIRE(gt.categories.size() == 1);
  CHECK(gt.annotations[0].box == Box{10, 20, 30, 40});
  CHECK(gt.categories[0].name == "cat");
}

TEST_CASE("unknown fields are ignored, crowd flags map to ignore") {
  const std::string path = path_of("gt_extra.json");
  write_text(path, R"({"info": {"year": 2021},
    "images": [{"id": 1, "width": 64, "height": 64, "license": 4}],
    "categories": [{"id": 2, "name": "dog", "supercategory": "animal"}],
    "annotations": [
      {"id": 1, "image_id": 1, "category_id": 2, "bbox": [0, 0, 8, 8], "area": 64.0, "iscrowd": 1},
      {"id": 2, "image_id": 1, "category_id": 2, "bbox": [9, 9, 8, 8], "iscrowd": 0}
    ]})");
  const GroundTruthSet gt = io::load_ground_truth(path);
  CHECK(gt.annotations[0].ignore);
  CHECK_FALSE(gt.annotations[1].ignore);
}

TEST_CASE("annotation errors carry a document path") {
  const std::string missing = path_of("gt_missing.json");
  write_text(missing, R"({"images": [{"id": 1, "width": 64, "height": 64}],
    "categories": [{"id": 2}],
    "annotations": [{"id": 1, "image_id": 1, "category_id": 2}]})");
  CHECK_THROWS_WITH(io::load_ground_truth(missing),
                    Catch::Matchers::ContainsSubstring("annotations[0]") &&
                        Catch::Matchers::ContainsSubstring("bbox"));

  const std::string dangling = path_of("gt_dangling.json");
  write_text(dangling, R"({"images": [{"id": 1, "width": 64, "height": 64}],
    "categories": [{"id": 2}],
    "annotations": [{"id": 1, "image_id": 99, "category_id": 2, "bbox": [0, 0, 4, 4]}]})");
  CHECK_THROWS_WITH(io::load_ground_truth(dangling),
                    Catch::Matchers::ContainsSubstring("dangling image_id: 99"));

  const std::string negative = path_of("gt_negative.json");
  write_text(negative, R"({"images": [{"id": 1, "width": 64, "height": 64}],
    "categories": [{"id": 2}],
    "annotations": [{"id": 7, "image_id": 1, "category_id": 2, "bbox": [0, 0, -4, 4]}]})");
  CHECK_THROWS_WITH(io::load_ground_truth(negative),
                    Catch::Matchers::ContainsSubstring("ann_id 7"));

  CHECK_THROWS_AS(io::load_ground_truth(path_of("does_not_exist.json")), ValidationError);
}

TEST_CASE("logit dumps enforce the declared width") {
  const std::string path = path_of("dump.jsonl");
  write_text(path,
             "{\"kind\":\"softmax_bg\",\"n_classes\":3}\n"
             "{\"image_id\":1,\"proposal_id\":0,\"bbox\":[0,0,4,4],\"logits\":[1,2,3,0]}\n");
  const io::LogitDump dump = io::load_logit_dump(path);
  CHECK(dump.kind == ClassifierKind::softmax_bg);
  CHECK(dump.n_classes == 3);
  REQUIRE(dump.proposals.size() == 1);
  CHECK(dump.proposals[0].logits.size() == 4);

  const std::string bad = path_of("dump_bad.jsonl");
  write_text(bad,
             "{\"kind\":\"softmax_bg\",\"n_classes\":3}\n"
             "{\"image_id\":1,\"proposal_id\":0,\"bbox\":[0,0,4,4],\"logits\":[1,2,3,0]}\n"
             "{\"image_id\":1,\"proposal_id\":1,\"bbox\":[0,0,4,4],\"logits\":[1,2,3]}\n");
  CHECK_THROWS_WITH(io::load_logit_dump(bad), Catch::Matchers::ContainsSubstring(":3:"));

  const std::string nonfinite = path_of("dump_nan.jsonl");
  write_text(nonfinite,
             "{\"kind\":\"multi_binary\",\"n_classes\":2}\n"
             "{\"image_id\":1,\"proposal_id\":0,\"bbox\":[0,0,4,4],\"logits\":[1,null]}\n");
  CHECK_THROWS_WITH(io::load_logit_dump(nonfinite),
                    Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("a dump with only a header is empty but valid") {
  const std::string path = path_of("dump_empty.jsonl");
  write_text(path, "{\"kind\":\"multi_binary\",\"n_classes\":5}\n");
  const io::LogitDump dump = io::load_logit_dump(path);
  CHECK(dump.kind == ClassifierKind::multi_binary);
  CHECK(dump.proposals.empty());
}

TEST_CASE("logit dumps round-trip exactly") {
  io::LogitDump dump;
  dump.kind = ClassifierKind::softmax_bg;
  dump.n_classes = 2;
  dump.proposals = {
      test_support::proposal(1, 0, {0.1234567890123456, -7.5, 3.0}, {1.5, 2.25, 8, 9}),
      test_support::proposal(2, 1, {-0.5, 0.25, 1e-12}, {0, 0, 3, 3}),
  };
  const std::string path = path_of("dump_rt.jsonl");
  io::save_logit_dump(dump, path);
  const io::LogitDump loaded = io::load_logit_dump(path);
  REQUIRE(loaded.proposals.size() == dump.proposals.size());
  for (size_t i = 0; i < dump.proposals.size(); ++i) {
    CHECK(loaded.proposals[i].logits == dump.proposals[i].logits);
    CHECK(loaded.proposals[i].box == dump.proposals[i].box);
  }
}

TEST_CASE("factor tables enforce coverage and positivity") {
  const ClassTable table = test_support::table_with_counts({5, 50, 500});
  const std::string good = path_of("factors.csv");
  write_text(good, "# class_id,factor\n1,1\n2,4\n3,4\n");
  const auto factors = io::load_factor_table(good, table);
  CHECK(factors.at(2) == 4.0);

  const std::string partial = path_of("factors_partial.csv");
  write_text(partial, "1,1\n");
  CHECK_THROWS_WITH(io::load_factor_table(partial, table),
                    Catch::Matchers::ContainsSubstring("missing classes: 2 3"));

  const std::string zero = path_of("factors_zero.csv");
  write_text(zero, "1,1\n2,0\n3,4\n");
  CHECK_THROWS_WITH(io::load_factor_table(zero, table),
                    Catch::Matchers::ContainsSubstring("class 2"));
}

TEST_CASE("factor tables round-trip through save") {
  const ClassTable table = test_support::table_with_counts({5, 50});
  const calib::FactorTable factors(std::map<int, double>{{1, 1.0}, {2, 3.1622776601683795}});
  const std::string path = path_of("factors_rt.csv");
  io::save_factor_table(factors, path);
  const auto loaded = io::load_factor_table(path, table);
  CHECK(loaded.at(1) == factors.at(1));
  CHECK(loaded.at(2) == factors.at(2));
}

TEST_CASE("class tables round-trip with thresholds") {
  const ClassTable table =
      test_support::table_with_counts({5, 500, 0}, BucketThresholds{20, 200});
  const std::string path = path_of("table.json");
  io::save_class_table(table, path);
  const ClassTable loaded = io::load_class_table(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded.thresholds().rare_max == 20);
  CHECK(loaded.n_images(2) == 500);
  CHECK(loaded.bucket(3) == Bucket::unseen);
}

TEST_CASE("results files round-trip within formatting precision") {
  std::vector<DetectionTuple> tuples = {
      {1, 0, 3, {10.25, 20.5, 30.125, 40}, 0.123456789},
      {1, 1, 4, {0, 0, 5, 5}, 1e-4},
      {2, 0, 3, {7, 8, 9, 10}, 0.99999},
  };
  const std::string path = path_of("results.json");
  io::write_results(tuples, path);
  const auto loaded = io::load_results(path);
  REQUIRE(loaded.size() == tuples.size());
  for (size_t i = 0; i < tuples.size(); ++i) {
    CHECK(loaded[i].image_id == tuples[i].image_id);
    CHECK(loaded[i].proposal_id == tuples[i].proposal_id);
    CHECK(loaded[i].class_id == tuples[i].class_id);
    CHECK(loaded[i].score == Catch::Approx(tuples[i].score).epsilon(1e-5));
    CHECK(loaded[i].box.x == Catch::Approx(tuples[i].box.x).epsilon(1e-5));
  }
}

TEST_CASE("results without proposal ids get per-image file order") {
  const std::string path = path_of("results_plain.json");
  write_text(path, R"([
    {"image_id": 5, "category_id": 1, "bbox": [0, 0, 4, 4], "score": 0.9},
    {"image_id": 6, "category_id": 1, "bbox": [0, 0, 4, 4], "score": 0.8},
    {"image_id": 5, "category_id": 2, "bbox": [1, 1, 4, 4], "score": 0.7}
  ])");
  const auto loaded = io::load_results(path);
  CHECK(loaded[0].proposal_id == 0);
  CHECK(loaded[1].proposal_id == 0);
  CHECK(loaded[2].proposal_id == 1);
}

TEST_CASE("an empty tuple list writes a valid empty array") {
  const std::string path = path_of("results_empty.json");
  io::write_results({}, path);
  CHECK(io::load_results(path).empty());
}

TEST_CASE("writers are byte-deterministic") {
  std::vector<DetectionTuple> tuples = {{1, 0, 3, {1.0 / 3.0, 2.0 / 7.0, 3, 4}, 0.123456789}};
  const std::string a = path_of("det_a.json");
  const std::string b = path_of("det_b.json");
  io::write_results(tuples, a);
  io::write_results(tuples, b);
  CHECK(read_text(a) == read_text(b));
  CHECK(read_text(a).find("0.123457") != std::string::npos);  // 6 significant digits
}

TEST_CASE("metric reports serialize to JSON and CSV") {
  const ClassTable table = test_support::table_with_counts({5, 50});
  eval::MetricsReport report;
  report.ap_overall = 0.5;
  report.ap_rare = 0.25;
  report.ar_overall = 0.75;
  report.per_class[1] = {0.25, 0.5, 3, 7};
  report.per_class[2] = {std::nullopt, std::nullopt, 0, 4};

  const std::string json_path = path_of("report.json");
  io::write_report(report, table, json_path, io::ReportFormat::structured, {{"cap", "image:300"}});
  const auto doc = nlohmann::json::parse(read_text(json_path));
  CHECK(doc["metrics"]["ap"].get<double>() == 0.5);
  CHECK(doc["metrics"]["ap_common"].is_null());
  CHECK(doc["meta"]["cap"] == "image:300");
  REQUIRE(doc["per_class"].size() == 2);
  CHECK(doc["per_class"][1]["ap"].is_null());

  const std::string csv_path = path_of("report.csv");
  io::write_report(report, table, csv_path, io::ReportFormat::csv, {{"cap", "image:300"}});
  const std::string csv = read_text(csv_path);
  CHECK(csv.find("# cap=image:300") != std::string::npos);
  CHECK(csv.find("class,1,class_1,rare,0.25,0.5,3,7") != std::string::npos);
  CHECK(csv.find("class,2,class_2,common,,,0,4") != std::string::npos);
  CHECK(csv.find("overall,,,,0.5,0.75,,") != std::string::npos);
  CHECK(csv.find("bucket,,,rare,0.25") != std::string::npos);
}

TEST_CASE("synth params load with defaults and validate") {
  const std::string path = path_of("params.json");
  write_text(path, R"({"n_classes": 12, "n_images": 30, "seed": 3,
    "frequency_law": {"kind": "zipf", "exponent": 1.2, "max_count": 500},
    "objects_per_image": {"min": 1, "max": 3}, "head_bias": 0.4})");
  const auto p = io::load_synth_params(path);
  CHECK(p.n_classes == 12);
  CHECK(p.frequency_law.zipf_max_count == 500);
  CHECK(p.head_bias == 0.4);
  CHECK(p.logit_noise == 1.0);  // default preserved

  const std::string bad = path_of("params_bad.json");
  write_text(bad, R"({"n_classes": 1})");
  CHECK_THROWS_AS(io::load_synth_params(bad), ConfigError);
}
