#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "norcal/cli.hpp"
#include "test_support.hpp"

using namespace norcal;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = test_support::scratch_dir("cli");

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

nlohmann::json read_json(const std::string& path) {
  return nlohmann::json::parse(read_text(path));
}

int run_cli(const std::vector<std::string>& args) { return cli::run(args); }

// One shared synthetic scenario on disk for the pipeline tests.
struct PipelineFixture {
  std::string dir = (kDir / "scenario").string();
  std::string params = path_of("scenario_params.json");

  PipelineFixture() {
    write_text(params, R"({"n_classes": 40, "n_images": 300, "seed": 7,
      "frequency_law": {"kind": "zipf", "exponent": 1.5, "max_count": 1000},
      "objects_per_image": {"min": 1, "max": 6}, "background_per_image": 2,
      "head_bias": 0.8, "localization_noise": 2.0, "logit_noise": 1.0})");
    REQUIRE(run_cli({"synth", "--params", params, "--out-dir", dir}) == 0);
  }

  std::string file(const std::string& name) const { return dir + "/" + name; }
};

const PipelineFixture& fixture() {
  static PipelineFixture f;
  return f;
}

}  // namespace

TEST_CASE("synth emits the four scenario files") {
  const auto& f = fixture();
  for (const char* name :
       {"annotations.json", "train_annotations.json", "class_table.json", "logits.jsonl"}) {
    INFO(name);
    CHECK(fs::exists(f.file(name)));
  }
}

TEST_CASE("class-table rebuilds the synth table byte for byte") {
  const auto& f = fixture();
  const std::string rebuilt = path_of("rebuilt_table.json");
  REQUIRE(run_cli({"class-table", "--train-annotations", f.file("train_annotations.json"),
                   "--out", rebuilt}) == 0);
  CHECK(read_text(rebuilt) == read_text(f.file("class_table.json")));
}

TEST_CASE("calibrate with gamma 0 matches the uncalibrated scoring byte for byte") {
  const auto& f = fixture();
  const std::string gamma0 = path_of("results_gamma0.json");
  const std::string none = path_of("results_none.json");
  REQUIRE(run_cli({"calibrate", "--dump", f.file("logits.jsonl"), "--class-table",
                   f.file("class_table.json"), "--factor", "cdt", "--gamma", "0", "--beta", "1",
                   "--out", gamma0}) == 0);
  REQUIRE(run_cli({"calibrate", "--dump", f.file("logits.jsonl"), "--class-table",
                   f.file("class_table.json"), "--factor", "none", "--out", none}) == 0);
  CHECK(read_text(gamma0) == read_text(none));
}

TEST_CASE("custom factor tables plug into calibrate") {
  const auto& f = fixture();
  // A custom table holding exactly the CDT factors must reproduce --factor cdt.
  const ClassTable table = io::load_class_table(f.file("class_table.json"));
  io::save_factor_table(calib::factor_cdt(table, 0.8), path_of("custom_factors.csv"));
  const std::string via_custom = path_of("results_custom.json");
  const std::string via_cdt = path_of("results_cdt08.json");
  REQUIRE(run_cli({"calibrate", "--dump", f.file("logits.jsonl"), "--class-table",
                   f.file("class_table.json"), "--factor",
                   "custom:" + path_of("custom_factors.csv"), "--out", via_custom}) == 0);
  REQUIRE(run_cli({"calibrate", "--dump", f.file("logits.jsonl"), "--class-table",
                   f.file("class_table.json"), "--factor", "cdt", "--gamma", "0.8", "--out",
                   via_cdt}) == 0);
  CHECK(read_text(via_custom) == read_text(via_cdt));
}

TEST_CASE("evaluate reports AP 1.0 on a perfect fixture") {
  GroundTruthSet gt;
  gt.images = {{1, 100, 100}, {2, 100, 100}};
  gt.categories = {{1, "a"}, {2, "b"}};
  gt.annotations = {{1, 1, 1, {10, 10, 20, 20}, false}, {2, 2, 2, {30, 30, 20, 20}, false}};
  io::save_ground_truth(gt, path_of("perfect_gt.json"));
  io::save_class_table(test_support::table_with_counts({5, 500}), path_of("perfect_table.json"));
  io::write_results({{1, 0, 1, {10, 10, 20, 20}, 0.9}, {2, 0, 2, {30, 30, 20, 20}, 0.9}},
                    path_of("perfect_results.json"));

  const std::string report = path_of("perfect_report.json");
  REQUIRE(run_cli({"evaluate", "--results", path_of("perfect_results.json"), "--annotations",
                   path_of("perfect_gt.json"), "--class-table", path_of("perfect_table.json"),
                   "--out", report}) == 0);
  const auto doc = read_json(report);
  CHECK(doc["metrics"]["ap"].get<double>() == 1.0);
  CHECK(doc["metrics"]["ar"].get<double>() == 1.0);
  CHECK(doc["meta"]["cap"] == "image:300");
}

TEST_CASE("full pipeline: sweep, calibrate at best gamma, evaluate") {
  const auto& f = fixture();

  const std::string sweep_out = path_of("sweep.json");
  REQUIRE(run_cli({"sweep", "--dump", f.file("logits.jsonl"), "--train-annotations",
                   f.file("annotations.json"), "--class-table", f.file("class_table.json"),
                   "--grid", "0:0.4:1.2", "--out", sweep_out}) == 0);
  const auto sweep = read_json(sweep_out);
  const double best_gamma = sweep["best_gamma"].get<double>();
  CHECK(best_gamma > 0.0);
  REQUIRE(sweep["grid"].size() == 4);

  const std::string calibrated = path_of("pipeline_calibrated.json");
  const std::string baseline = path_of("pipeline_baseline.json");
  REQUIRE(run_cli({"calibrate", "--dump", f.file("logits.jsonl"), "--class-table",
                   f.file("class_table.json"), "--factor", "cdt", "--gamma",
                   std::to_string(best_gamma), "--out", calibrated}) == 0);
  REQUIRE(run_cli({"calibrate", "--dump", f.file("logits.jsonl"), "--class-table",
                   f.file("class_table.json"), "--factor", "none", "--out", baseline}) == 0);

  const std::string report_cal = path_of("pipeline_report_cal.json");
  const std::string report_base = path_of("pipeline_report_base.json");
  for (const auto& [results, report] :
       {std::pair{calibrated, report_cal}, std::pair{baseline, report_base}}) {
    REQUIRE(run_cli({"evaluate", "--results", results, "--annotations",
                     f.file("annotations.json"), "--class-table", f.file("class_table.json"),
                     "--out", report}) == 0);
  }
  const double ap_cal = read_json(report_cal)["metrics"]["ap"].get<double>();
  const double ap_base = read_json(report_base)["metrics"]["ap"].get<double>();
  CHECK(ap_cal >= ap_base);

  // The sweep's own curve must agree with the independently evaluated baseline.
  const double sweep_baseline_ap = sweep["curve"][0]["ap"].get<double>();
  CHECK(sweep_baseline_ap == Catch::Approx(ap_base).margin(5e-7));
}

TEST_CASE("analyze emits score statistics, AR table and cap curve") {
  const auto& f = fixture();
  const std::string results = path_of("results_none.json");  // from the identity test
  REQUIRE(fs::exists(results));
  const std::string out = path_of("analysis.json");
  REQUIRE(run_cli({"analyze", "--results", results, "--class-table", f.file("class_table.json"),
                   "--annotations", f.file("annotations.json"), "--caps", "10,50,100,300",
                   "--out", out}) == 0);
  const auto doc = read_json(out);
  const auto& means = doc["score_statistics"]["bucket_means"];
  CHECK(means["frequent"].get<double>() == 1.0);
  CHECK(means["rare"].get<double>() < means["common"].get<double>());
  REQUIRE(doc["cap_curve"].size() == 4);
  CHECK(doc["cap_curve"][0]["cap"].get<long>() == 10);
  CHECK(doc["ar_table"].contains("ar_rare"));

  const std::string csv_out = path_of("analysis.csv");
  REQUIRE(run_cli({"analyze", "--results", results, "--class-table", f.file("class_table.json"),
                   "--format", "csv", "--out", csv_out}) == 0);
  CHECK(read_text(csv_out).find("mean_rare,") != std::string::npos);
}

TEST_CASE("exit codes distinguish flag, validation and help paths") {
  CHECK(run_cli({"evaluate", "--no-such-flag"}) == 1);
  CHECK(run_cli({"calibrate", "--dump", "x", "--class-table", "y", "--factor", "bogus",
                 "--out", "z"}) == 1);
  CHECK(run_cli({"evaluate", "--results", path_of("absent.json"), "--annotations",
                 path_of("absent.json"), "--class-table", path_of("absent.json"), "--out",
                 path_of("r.json")}) == 2);
  CHECK(run_cli({"--help"}) == 0);
  CHECK(run_cli({}) == 1);  // a subcommand is required
}

TEST_CASE("invalid gamma for the factor family fails before touching files") {
  CHECK(run_cli({"calibrate", "--dump", path_of("absent.jsonl"), "--class-table",
                 path_of("absent.json"), "--factor", "ens", "--gamma", "1.5", "--out",
                 path_of("r.json")}) == 1);
}

TEST_CASE("subcommands do not mutate their inputs") {
  const auto& f = fixture();
  const std::string dump_before = read_text(f.file("logits.jsonl"));
  const std::string gt_before = read_text(f.file("annotations.json"));
  REQUIRE(run_cli({"calibrate", "--dump", f.file("logits.jsonl"), "--class-table",
                   f.file("class_table.json"), "--factor", "cdt", "--gamma", "0.5", "--out",
                   path_of("mut_check.json")}) == 0);
  CHECK(read_text(f.file("logits.jsonl")) == dump_before);
  CHECK(read_text(f.file("annotations.json")) == gt_before);
}
