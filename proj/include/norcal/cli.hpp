#pragma once

// Command-line surface: class-table, calibrate, evaluate, sweep, analyze and
// synth subcommands. Flags are validated before any file is touched; errors
// are emitted as one JSON line on stderr with exit codes
//   1 invalid flags, 2 input validation failure, 3 internal invariant.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "norcal/norcal.hpp"

namespace norcal::cli {

namespace detail {

inline Mechanism parse_mechanism(const std::string& s) {
  if (s == "divide_exponential") return Mechanism::divide_exponential;
  if (s == "divide_probability") return Mechanism::divide_probability;
  if (s == "scale_logit") return Mechanism::scale_logit;
  throw ConfigError("unknown mechanism '" + s +
                    "' (divide_exponential | divide_probability | scale_logit)");
}

inline FactorSpec parse_factor(const std::string& s, double gamma) {
  if (s == "cdt") return FactorSpec::cdt(gamma);
  if (s == "ens") return FactorSpec::ens(gamma);
  if (s == "none") return FactorSpec::none();
  if (s.rfind("custom:", 0) == 0) return FactorSpec::custom(s.substr(7));
  throw ConfigError("unknown factor '" + s + "' (cdt | ens | custom:PATH | none)");
}

inline eval::DetectionCap parse_cap(const std::string& s) {
  const size_t colon = s.find(':');
  if (colon != std::string::npos) {
    const std::string mode = s.substr(0, colon);
    long limit = 0;
    try {
      limit = std::stol(s.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("cap limit must be an integer in '" + s + "'");
    }
    if (limit < 1) throw ConfigError("cap limit must be >= 1");
    if (mode == "image") return eval::DetectionCap::per_image(limit);
    if (mode == "class") return eval::DetectionCap::per_class_fixed(limit);
  }
  throw ConfigError("cap must be image:K or class:M, got '" + s + "'");
}

inline bool parse_bool(const std::string& s, const std::string& flag) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(flag + " must be true or false, got '" + s + "'");
}

// "a:step:b" range or comma-separated values.
inline std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  try {
    if (std::count(s.begin(), s.end(), ':') == 2) {
      const size_t c1 = s.find(':');
      const size_t c2 = s.find(':', c1 + 1);
      const double lo = std::stod(s.substr(0, c1));
      const double step = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
      const double hi = std::stod(s.substr(c2 + 1));
      if (step <= 0.0 || hi < lo) throw ConfigError("grid range must be lo:step:hi");
      const long n = std::lround((hi - lo) / step);
      for (long i = 0; i <= n; ++i) {
        const double g = lo + static_cast<double>(i) * step;
        if (g <= hi + 1e-12) grid.push_back(g);
      }
    } else {
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse grid '" + s + "'");
  }
  if (grid.empty()) throw ConfigError("grid '" + s + "' is empty");
  return grid;
}

inline std::vector<long> parse_caps_list(const std::string& s) {
  std::vector<long> caps;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      caps.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse caps list '" + s + "'");
    }
    if (caps.back() < 1) throw ConfigError("caps must be >= 1");
  }
  if (caps.empty()) throw ConfigError("caps list is empty");
  return caps;
}

inline tune::SweepObjective parse_objective(const std::string& s) {
  tune::SweepObjective obj;
  if (s == "ap_overall") {
    obj.kind = tune::SweepObjective::Kind::ap_overall;
  } else if (s == "ap_rare") {
    obj.kind = tune::SweepObjective::Kind::ap_rare;
  } else if (s.rfind("weighted:", 0) == 0) {
    obj.kind = tune::SweepObjective::Kind::weighted;
    std::stringstream ss(s.substr(9));
    std::string item;
    std::vector<double> w;
    while (std::getline(ss, item, ',')) {
      try {
        w.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("cannot parse objective weights in '" + s + "'");
      }
    }
    if (w.size() != 3)
      throw ConfigError("weighted objective needs 3 weights: weighted:rare,common,frequent");
    obj.w_rare = w[0];
    obj.w_common = w[1];
    obj.w_frequent = w[2];
  } else {
    throw ConfigError("unknown objective '" + s +
                      "' (ap_overall | ap_rare | weighted:wr,wc,wf)");
  }
  return obj;
}

inline std::vector<double> iou_range(double lo, double hi, double step) {
  if (step <= 0.0 || lo > hi) throw ConfigError("iou range must satisfy min <= max, step > 0");
  std::vector<double> t;
  const long n = std::lround((hi - lo) / step);
  for (long i = 0; i <= n; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    if (v <= hi + 1e-12) t.push_back(v);
  }
  return t;
}

inline io::ReportFormat parse_format(const std::string& s) {
  if (s == "structured" || s == "json") return io::ReportFormat::structured;
  if (s == "csv") return io::ReportFormat::csv;
  throw ConfigError("format must be structured or csv, got '" + s + "'");
}

inline std::string fmt(double v) { return io::detail::fmt6(v); }

}  // namespace detail

// Shared calibration flag block (calibrate + sweep).
struct CalibrationFlags {
  std::string dump_path;
  std::string class_table_path;
  std::string factor = "cdt";
  double gamma = 0.0;
  double beta = 1.0;
  std::string mechanism = "divide_exponential";
  std::string normalize = "auto";  // auto: true for softmax_bg, false otherwise
  double threshold = 1e-4;

  // Builds the config against a loaded dump header. `auto` normalization
  // follows the protocol default: on for softmax models, off for sigmoid.
  CalibrationConfig resolve(ClassifierKind kind) const {
    CalibrationConfig cfg;
    cfg.classifier_kind = kind;
    cfg.mechanism = detail::parse_mechanism(mechanism);
    cfg.factor = detail::parse_factor(factor, gamma);
    cfg.beta = beta;
    cfg.score_threshold = threshold;
    cfg.normalize = normalize == "auto" ? kind == ClassifierKind::softmax_bg
                                        : detail::parse_bool(normalize, "--normalize");
    return cfg;
  }

  // Flag-level validation that must not touch any file.
  void validate_flags() const {
    CalibrationConfig probe;
    probe.mechanism = detail::parse_mechanism(mechanism);
    probe.factor = detail::parse_factor(factor, gamma);
    probe.beta = beta;
    probe.score_threshold = threshold;
    probe.normalize = false;
    probe.validate();
    if (normalize != "auto") detail::parse_bool(normalize, "--normalize");
  }
};

inline int run(int argc, const char* const* argv) {
  CLI::App app{"NorCal: post-processing calibration and evaluation for long-tailed detection"};
  app.require_subcommand(1);

  // class-table ------------------------------------------------------------
  auto* cmd_table = app.add_subcommand("class-table",
                                       "Build a class-frequency table from training annotations");
  std::string ct_annotations, ct_out;
  long ct_rare_max = 10, ct_common_max = 100;
  cmd_table->add_option("--train-annotations", ct_annotations)->required();
  cmd_table->add_option("--out", ct_out)->required();
  cmd_table->add_option("--rare-max", ct_rare_max);
  cmd_table->add_option("--common-max", ct_common_max);

  // calibrate ----------------------------------------------------------------
  auto* cmd_cal = app.add_subcommand("calibrate", "Rescale a logit dump into detection results");
  CalibrationFlags cal;
  std::string cal_out;
  cmd_cal->add_option("--dump", cal.dump_path)->required();
  cmd_cal->add_option("--class-table", cal.class_table_path)->required();
  cmd_cal->add_option("--factor", cal.factor);
  cmd_cal->add_option("--gamma", cal.gamma);
  cmd_cal->add_option("--beta", cal.beta);
  cmd_cal->add_option("--mechanism", cal.mechanism);
  cmd_cal->add_option("--normalize", cal.normalize);
  cmd_cal->add_option("--threshold", cal.threshold);
  cmd_cal->add_option("--out", cal_out)->required();

  // evaluate -----------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("evaluate", "Score detection results against annotations");
  std::string ev_results, ev_annotations, ev_table, ev_out;
  std::string ev_cap = "image:300", ev_format = "structured";
  double ev_iou_min = 0.50, ev_iou_max = 0.95, ev_iou_step = 0.05;
  int ev_recall_points = 101;
  cmd_eval->add_option("--results", ev_results)->required();
  cmd_eval->add_option("--annotations", ev_annotations)->required();
  cmd_eval->add_option("--class-table", ev_table)->required();
  cmd_eval->add_option("--cap", ev_cap);
  cmd_eval->add_option("--iou-min", ev_iou_min);
  cmd_eval->add_option("--iou-max", ev_iou_max);
  cmd_eval->add_option("--iou-step", ev_iou_step);
  cmd_eval->add_option("--recall-points", ev_recall_points);
  cmd_eval->add_option("--format", ev_format);
  cmd_eval->add_option("--out", ev_out)->required();

  // sweep ----------------------------------------------------------------------
  auto* cmd_sweep = app.add_subcommand("sweep", "Grid-search gamma on training-split data");
  CalibrationFlags sw;
  std::string sw_annotations, sw_out, sw_grid, sw_objective = "ap_overall";
  std::string sw_cap = "image:300", sw_format = "structured";
  long sw_subset = 0;
  uint64_t sw_seed = 0;
  double sw_iou_min = 0.50, sw_iou_max = 0.95, sw_iou_step = 0.05;
  cmd_sweep->add_option("--dump", sw.dump_path)->required();
  cmd_sweep->add_option("--train-annotations", sw_annotations)->required();
  cmd_sweep->add_option("--class-table", sw.class_table_path)->required();
  cmd_sweep->add_option("--grid", sw_grid);
  cmd_sweep->add_option("--subset", sw_subset);
  cmd_sweep->add_option("--seed", sw_seed);
  cmd_sweep->add_option("--objective", sw_objective);
  cmd_sweep->add_option("--factor", sw.factor);
  cmd_sweep->add_option("--beta", sw.beta);
  cmd_sweep->add_option("--mechanism", sw.mechanism);
  cmd_sweep->add_option("--normalize", sw.normalize);
  cmd_sweep->add_option("--threshold", sw.threshold);
  cmd_sweep->add_option("--cap", sw_cap);
  cmd_sweep->add_option("--iou-min", sw_iou_min);
  cmd_sweep->add_option("--iou-max", sw_iou_max);
  cmd_sweep->add_option("--iou-step", sw_iou_step);
  cmd_sweep->add_option("--format", sw_format);
  cmd_sweep->add_option("--out", sw_out)->required();

  // analyze ---------------------------------------------------------------------
  auto* cmd_an = app.add_subcommand(
      "analyze", "Score statistics, AR table and cap-vs-AP curve for detection results");
  std::string an_results, an_table, an_out, an_annotations;
  std::string an_caps = "10,50,100,300", an_format = "structured", an_cap = "image:300";
  long an_top_k = 300;
  double an_iou_min = 0.50, an_iou_max = 0.95, an_iou_step = 0.05;
  cmd_an->add_option("--results", an_results)->required();
  cmd_an->add_option("--class-table", an_table)->required();
  cmd_an->add_option("--top-k", an_top_k);
  cmd_an->add_option("--annotations", an_annotations);
  cmd_an->add_option("--caps", an_caps);
  cmd_an->add_option("--cap", an_cap);
  cmd_an->add_option("--iou-min", an_iou_min);
  cmd_an->add_option("--iou-max", an_iou_max);
  cmd_an->add_option("--iou-step", an_iou_step);
  cmd_an->add_option("--format", an_format);
  cmd_an->add_option("--out", an_out)->required();

  // synth -------------------------------------------------------------------------
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic long-tailed scenario");
  std::string sy_params, sy_out_dir;
  cmd_synth->add_option("--params", sy_params)->required();
  cmd_synth->add_option("--out-dir", sy_out_dir)->required();

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      std::cout << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      std::cout << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      std::cerr << nlohmann::json{{"error", e.what()}, {"exit_code", 1}}.dump() << "\n";
      return 1;
    }

    if (app.got_subcommand(cmd_table)) {
      BucketThresholds thresholds{ct_rare_max, ct_common_max};
      thresholds.validate();
      const GroundTruthSet gt = io::load_ground_truth(ct_annotations);
      io::save_class_table(build_class_table(gt, thresholds), ct_out);
    } else if (app.got_subcommand(cmd_cal)) {
      cal.validate_flags();
      const io::LogitDump dump = io::load_logit_dump(cal.dump_path);
      const ClassTable table = io::load_class_table(cal.class_table_path);
      const CalibrationConfig cfg = cal.resolve(dump.kind);
      cfg.validate();
      const calib::FactorTable factors =
          cfg.factor.kind == FactorKind::custom
              ? io::load_factor_table(cfg.factor.path, table)
              : calib::make_factors(table, cfg);
      io::write_results(calib::calibrate_dataset(dump.proposals, table, factors, cfg), cal_out);
    } else if (app.got_subcommand(cmd_eval)) {
      eval::EvalConfig cfg;
      cfg.iou_thresholds = detail::iou_range(ev_iou_min, ev_iou_max, ev_iou_step);
      cfg.cap = detail::parse_cap(ev_cap);
      cfg.recall_points = ev_recall_points;
      cfg.validate();
      const io::ReportFormat format = detail::parse_format(ev_format);
      const std::vector<DetectionTuple> tuples = io::load_results(ev_results);
      const GroundTruthSet gt = io::load_ground_truth(ev_annotations);
      const ClassTable table = io::load_class_table(ev_table);
      const eval::MetricsReport report = eval::evaluate(tuples, gt, table, cfg);
      const io::Meta meta = {{"subcommand", "evaluate"},   {"results", ev_results},
                             {"annotations", ev_annotations}, {"class_table", ev_table},
                             {"cap", ev_cap},              {"iou_min", detail::fmt(ev_iou_min)},
                             {"iou_max", detail::fmt(ev_iou_max)},
                             {"iou_step", detail::fmt(ev_iou_step)},
                             {"recall_points", std::to_string(ev_recall_points)}};
      io::write_report(report, table, ev_out, format, meta);
    } else if (app.got_subcommand(cmd_sweep)) {
      sw.validate_flags();
      const tune::SweepObjective objective = detail::parse_objective(sw_objective);
      eval::EvalConfig eval_cfg;
      eval_cfg.iou_thresholds = detail::iou_range(sw_iou_min, sw_iou_max, sw_iou_step);
      eval_cfg.cap = detail::parse_cap(sw_cap);
      eval_cfg.validate();
      const io::ReportFormat format = detail::parse_format(sw_format);
      const io::LogitDump dump = io::load_logit_dump(sw.dump_path);
      const GroundTruthSet gt = io::load_ground_truth(sw_annotations);
      const ClassTable table = io::load_class_table(sw.class_table_path);
      const CalibrationConfig base_cfg = sw.resolve(dump.kind);
      const std::vector<double> grid = sw_grid.empty()
                                           ? tune::default_grid(base_cfg.factor.kind)
                                           : detail::parse_grid(sw_grid);
      std::optional<long> subset;
      if (sw_subset > 0) subset = sw_subset;
      const tune::SweepResult sweep = tune::sweep_gamma(dump.proposals, gt, table, base_cfg,
                                                        grid, eval_cfg, subset, sw_seed, objective);
      const io::Meta meta = {{"subcommand", "sweep"},
                             {"dump", sw.dump_path},
                             {"train_annotations", sw_annotations},
                             {"class_table", sw.class_table_path},
                             {"factor", sw.factor},
                             {"mechanism", sw.mechanism},
                             {"beta", detail::fmt(sw.beta)},
                             {"normalize", sw.normalize},
                             {"threshold", detail::fmt(sw.threshold)},
                             {"cap", sw_cap},
                             {"subset", std::to_string(sw_subset)},
                             {"seed", std::to_string(sw_seed)},
                             {"objective", sw_objective}};
      io::write_report(sweep, table, sw_out, format, meta);
    } else if (app.got_subcommand(cmd_an)) {
      if (an_top_k < 1) throw ConfigError("--top-k must be >= 1");
      const std::vector<long> caps = detail::parse_caps_list(an_caps);
      eval::EvalConfig eval_cfg;
      eval_cfg.iou_thresholds = detail::iou_range(an_iou_min, an_iou_max, an_iou_step);
      eval_cfg.cap = detail::parse_cap(an_cap);
      eval_cfg.validate();
      const io::ReportFormat format = detail::parse_format(an_format);

      const std::vector<DetectionTuple> tuples = io::load_results(an_results);
      const ClassTable table = io::load_class_table(an_table);
      const eval::ScoreStatistics stats = eval::score_statistics(tuples, table, an_top_k);

      nlohmann::json doc;
      doc["meta"] = io::Meta{{"subcommand", "analyze"},
                             {"results", an_results},
                             {"class_table", an_table},
                             {"top_k", std::to_string(an_top_k)}};
      doc["score_statistics"] = io::score_stats_to_json(stats);

      std::vector<std::pair<long, eval::MetricsReport>> cap_curve;
      std::optional<eval::MetricsReport> ar_report;
      if (!an_annotations.empty()) {
        const GroundTruthSet gt = io::load_ground_truth(an_annotations);
        ar_report = eval::evaluate(tuples, gt, table, eval_cfg);
        doc["ar_table"] = io::metrics_to_json(*ar_report, table)["metrics"];
        doc["cap_curve"] = nlohmann::json::array();
        for (long k : caps) {
          eval::EvalConfig cap_cfg = eval_cfg;
          cap_cfg.cap = eval::DetectionCap::per_image(k);
          eval::MetricsReport r = eval::evaluate(tuples, gt, table, cap_cfg);
          doc["cap_curve"].push_back({{"cap", k},
                                      {"ap", io::detail::opt6(r.ap_overall)},
                                      {"ap_rare", io::detail::opt6(r.ap_rare)},
                                      {"ap_common", io::detail::opt6(r.ap_common)},
                                      {"ap_frequent", io::detail::opt6(r.ap_frequent)},
                                      {"ar", io::detail::opt6(r.ar_overall)}});
          cap_curve.emplace_back(k, std::move(r));
        }
      }

      std::ofstream out = io::detail::open_out(an_out);
      if (format == io::ReportFormat::structured) {
        out << doc.dump(2) << "\n";
      } else {
        out << "# subcommand=analyze\n# top_k=" << an_top_k << "\n";
        out << "stat,value\n";
        auto stat_row = [&](const char* name, const std::optional<double>& v) {
          out << name << "," << (v ? detail::fmt(*v) : "") << "\n";
        };
        stat_row("mean_rare", stats.mean_rare);
        stat_row("mean_common", stats.mean_common);
        stat_row("mean_frequent", stats.mean_frequent);
        stat_row("rare_mean_own", stats.rare_mean_own);
        stat_row("rare_mean_other_rare", stats.rare_mean_other_rare);
        stat_row("rare_mean_best_common", stats.rare_mean_best_common);
        stat_row("rare_mean_best_frequent", stats.rare_mean_best_frequent);
        if (!cap_curve.empty()) {
          out << "\ncap,ap,ap_rare,ap_common,ap_frequent,ar\n";
          for (const auto& [k, r] : cap_curve) {
            out << k << "," << io::detail::csv_opt(r.ap_overall) << ","
                << io::detail::csv_opt(r.ap_rare) << "," << io::detail::csv_opt(r.ap_common)
                << "," << io::detail::csv_opt(r.ap_frequent) << ","
                << io::detail::csv_opt(r.ar_overall) << "\n";
          }
        }
      }
    } else if (app.got_subcommand(cmd_synth)) {
      const synth::SynthParams params = io::load_synth_params(sy_params);
      std::error_code ec;
      std::filesystem::create_directories(sy_out_dir, ec);
      if (ec) throw ValidationError("cannot create directory " + sy_out_dir);
      const synth::Scenario sc = synth::gen_scenario(params);
      const std::filesystem::path dir(sy_out_dir);
      io::save_ground_truth(sc.gt, (dir / "annotations.json").string());
      io::save_ground_truth(sc.train_gt, (dir / "train_annotations.json").string());
      io::save_class_table(sc.train_table, (dir / "class_table.json").string());
      io::LogitDump dump;
      dump.kind = ClassifierKind::softmax_bg;
      dump.n_classes = params.n_classes;
      dump.proposals = sc.dump;
      io::save_logit_dump(dump, (dir / "logits.jsonl").string());
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"exit_code", 1}}.dump() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"exit_code", 2}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"exit_code", 3}}.dump() << "\n";
    return 3;
  }
}

inline int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("norcal");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace norcal::cli
