#pragma once

// File formats: COCO-subset annotation JSON, line-delimited logit dumps,
// factor-table pairs, detection results arrays, class tables, and metric /
// sweep reports (JSON or CSV). Writers are byte-deterministic: display floats
// use 6 significant digits, values that must round-trip exactly (logits,
// factors) use shortest round-trip formatting. Load errors always carry a
// line number or a path into the document.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "norcal/calib.hpp"
#include "norcal/core.hpp"
#include "norcal/eval.hpp"
#include "norcal/synth.hpp"
#include "norcal/tune.hpp"

namespace norcal::io {

using nlohmann::json;

namespace detail {

inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Nearest double to the 6-significant-digit rendering, so JSON output stays
// short and byte-deterministic.
inline double round6(double v) { return std::strtod(fmt6(v).c_str(), nullptr); }

// Integral values print as integers (COCO files keep ids and pixel grids
// integral); everything else round-trips.
inline json number(double v) {
  if (v == static_cast<long long>(v) && std::abs(v) < 9.0e15)
    return json(static_cast<long long>(v));
  return json(v);
}

inline json opt6(const std::optional<double>& v) {
  if (!v) return json(nullptr);
  return json(round6(*v));
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

inline const json& field(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + ": missing required field '" + key + "'");
  return *it;
}

inline double number_at(const json& obj, const std::string& key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) throw ValidationError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline Box box_from(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != 4)
    throw ValidationError(where + ": bbox must be [x, y, w, h]");
  for (const json& v : arr)
    if (!v.is_number()) throw ValidationError(where + ": bbox entries must be numbers");
  return Box{arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(),
             arr[3].get<double>()};
}

inline json box_to(const Box& b) {
  return json::array({number(b.x), number(b.y), number(b.w), number(b.h)});
}

inline json parse_document(std::istream& in, const std::string& path) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return doc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ground truth (COCO-subset annotation files)

inline GroundTruthSet load_ground_truth(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  const json doc = detail::parse_document(in, path);
  if (!doc.is_object()) throw ValidationError(path + ": root must be an object");

  GroundTruthSet gt;
  const json& images = detail::field(doc, "images", path);
  for (size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    const json& im = images[i];
    gt.images.push_back({static_cast<long>(detail::number_at(im, "id", where)),
                         detail::number_at(im, "width", where),
                         detail::number_at(im, "height", where)});
  }
  const json& cats = detail::field(doc, "categories", path);
  for (size_t i = 0; i < cats.size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    const json& c = cats[i];
    CategoryInfo info;
    info.class_id = static_cast<int>(detail::number_at(c, "id", where));
    info.name = c.contains("name") && c["name"].is_string()
                    ? c["name"].get<std::string>()
                    : "class_" + std::to_string(info.class_id);
    gt.categories.push_back(std::move(info));
  }
  const json& anns = detail::field(doc, "annotations", path);
  for (size_t i = 0; i < anns.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const json& a = anns[i];
    Annotation ann;
    ann.ann_id = static_cast<long>(detail::number_at(a, "id", where));
    ann.image_id = static_cast<long>(detail::number_at(a, "image_id", where));
    ann.class_id = static_cast<int>(detail::number_at(a, "category_id", where));
    ann.box = detail::box_from(detail::field(a, "bbox", where), where + ".bbox");
    if (ann.box.w < 0.0 || ann.box.h < 0.0)
      throw ValidationError(where + ".bbox: negative size (ann_id " +
                            std::to_string(ann.ann_id) + ")");
    // LVIS-style ignore flag; COCO crowd boxes get the same treatment.
    if (a.contains("ignore") && a["ignore"].is_boolean() && a["ignore"].get<bool>())
      ann.ignore = true;
    if (a.contains("iscrowd") && a["iscrowd"].is_number() && a["iscrowd"].get<int>() != 0)
      ann.ignore = true;
    gt.annotations.push_back(ann);
  }
  gt.validate();
  return gt;
}

inline void save_ground_truth(const GroundTruthSet& gt, const std::string& path) {
  json doc;
  doc["images"] = json::array();
  for (const ImageInfo& im : gt.images)
    doc["images"].push_back({{"id", im.image_id},
                             {"width", detail::number(im.width)},
                             {"height", detail::number(im.height)}});
  doc["categories"] = json::array();
  for (const CategoryInfo& c : gt.categories)
    doc["categories"].push_back({{"id", c.class_id}, {"name", c.name}});
  doc["annotations"] = json::array();
  for (const Annotation& a : gt.annotations) {
    json rec = {{"id", a.ann_id},
                {"image_id", a.image_id},
                {"category_id", a.class_id},
                {"bbox", detail::box_to(a.box)}};
    if (a.ignore) rec["ignore"] = true;
    doc["annotations"].push_back(std::move(rec));
  }
  std::ofstream out = detail::open_out(path);
  out << doc.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Logit dumps: header line {"kind", "n_classes"}, then one record per line.

struct LogitDump {
  ClassifierKind kind = ClassifierKind::softmax_bg;
  int n_classes = 0;
  std::vector<ProposalLogits> proposals;

  size_t logit_width() const {
    return static_cast<size_t>(n_classes) + (kind == ClassifierKind::softmax_bg ? 1 : 0);
  }
};

inline LogitDump load_logit_dump(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  std::string line;
  long line_no = 0;

  auto fail = [&](const std::string& msg) -> ValidationError {
    return ValidationError(path + ":" + std::to_string(line_no) + ": " + msg);
  };

  if (!std::getline(in, line)) throw ValidationError(path + ": empty file, header expected");
  ++line_no;
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(e.what());
  }
  LogitDump dump;
  const std::string kind = detail::field(header, "kind", path + ":1").get<std::string>();
  if (kind == "softmax_bg") dump.kind = ClassifierKind::softmax_bg;
  else if (kind == "multi_binary") dump.kind = ClassifierKind::multi_binary;
  else throw fail("unknown classifier kind '" + kind + "'");
  dump.n_classes = static_cast<int>(detail::number_at(header, "n_classes", path + ":1"));
  if (dump.n_classes < 1) throw fail("n_classes must be >= 1");
  const size_t width = dump.logit_width();

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(e.what());
    }
    const std::string where = path + ":" + std::to_string(line_no);
    ProposalLogits p;
    p.image_id = static_cast<long>(detail::number_at(rec, "image_id", where));
    p.proposal_id = static_cast<long>(detail::number_at(rec, "proposal_id", where));
    p.box = detail::box_from(detail::field(rec, "bbox", where), where + ".bbox");
    const json& logits = detail::field(rec, "logits", where);
    if (!logits.is_array()) throw fail("logits must be an array");
    if (logits.size() != width)
      throw fail("expected " + std::to_string(width) + " logits, got " +
                 std::to_string(logits.size()));
    p.logits.reserve(width);
    for (const json& v : logits) {
      if (!v.is_number()) throw fail("non-finite or non-numeric logit");
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw fail("non-finite logit");
      p.logits.push_back(x);
    }
    dump.proposals.push_back(std::move(p));
  }
  return dump;
}

inline void save_logit_dump(const LogitDump& dump, const std::string& path) {
  std::ofstream out = detail::open_out(path);
  out << json{{"kind", to_string(dump.kind)}, {"n_classes", dump.n_classes}}.dump() << "\n";
  const size_t width = dump.logit_width();
  for (const ProposalLogits& p : dump.proposals) {
    if (p.logits.size() != width)
      throw ValidationError("proposal image_id=" + std::to_string(p.image_id) +
                            " proposal_id=" + std::to_string(p.proposal_id) +
                            ": logit width does not match dump header");
    json rec = {{"image_id", p.image_id},
                {"proposal_id", p.proposal_id},
                {"bbox", detail::box_to(p.box)},
                {"logits", p.logits}};
    out << rec.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Factor tables: "class_id,factor" per line; '#' comments allowed.

inline calib::FactorTable load_factor_table(const std::string& path, const ClassTable& table) {
  std::ifstream in = detail::open_in(path);
  std::map<int, double> factors;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected 'class_id,factor'");
    int class_id = 0;
    double factor = 0.0;
    try {
      class_id = std::stoi(line.substr(start, comma - start));
      factor = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected 'class_id,factor'");
    }
    if (!table.contains(class_id))
      throw ValidationError(path + ":" + std::to_string(line_no) + ": unknown class " +
                            std::to_string(class_id));
    if (!(factor > 0.0) || !std::isfinite(factor))
      throw ValidationError(path + ":" + std::to_string(line_no) + ": factor for class " +
                            std::to_string(class_id) + " must be positive");
    if (!factors.emplace(class_id, factor).second)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": duplicate class " +
                            std::to_string(class_id));
  }
  calib::FactorTable result(std::move(factors));
  result.aligned(table);  // throws listing every missing class
  return result;
}

inline void save_factor_table(const calib::FactorTable& factors, const std::string& path) {
  std::ofstream out = detail::open_out(path);
  out << "# class_id,factor\n";
  for (const auto& [class_id, a] : factors.values())
    out << class_id << "," << json(a).dump() << "\n";
}

// ---------------------------------------------------------------------------
// Class tables

inline ClassTable load_class_table(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  const json doc = detail::parse_document(in, path);
  BucketThresholds thresholds;
  if (doc.contains("thresholds")) {
    const json& t = doc["thresholds"];
    thresholds.rare_max = static_cast<long>(detail::number_at(t, "rare_max", "thresholds"));
    thresholds.common_max = static_cast<long>(detail::number_at(t, "common_max", "thresholds"));
  }
  std::vector<ClassEntry> entries;
  const json& classes = detail::field(doc, "classes", path);
  for (size_t i = 0; i < classes.size(); ++i) {
    const std::string where = "classes[" + std::to_string(i) + "]";
    const json& c = classes[i];
    ClassEntry e;
    e.class_id = static_cast<int>(detail::number_at(c, "id", where));
    e.n_images = static_cast<long>(detail::number_at(c, "n_images", where));
    e.name = c.contains("name") && c["name"].is_string() ? c["name"].get<std::string>()
                                                         : "class_" + std::to_string(e.class_id);
    entries.push_back(std::move(e));
  }
  return ClassTable(std::move(entries), thresholds);
}

inline void save_class_table(const ClassTable& table, const std::string& path) {
  json doc;
  doc["thresholds"] = {{"rare_max", table.thresholds().rare_max},
                       {"common_max", table.thresholds().common_max}};
  doc["classes"] = json::array();
  for (const ClassEntry& e : table.entries())
    doc["classes"].push_back({{"id", e.class_id},
                              {"name", e.name},
                              {"n_images", e.n_images},
                              {"bucket", to_string(table.bucket(e.class_id))}});
  std::ofstream out = detail::open_out(path);
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Detection results: flat array mirroring the standard results format
// (image_id, category_id, bbox, score) plus proposal_id for reproducible
// tie-breaking. Written by hand so output is byte-deterministic.

inline void write_results(const std::vector<DetectionTuple>& tuples, const std::string& path) {
  std::ofstream out = detail::open_out(path);
  if (tuples.empty()) {
    out << "[]\n";
    return;
  }
  out << "[\n";
  for (size_t i = 0; i < tuples.size(); ++i) {
    const DetectionTuple& t = tuples[i];
    out << "{\"image_id\":" << t.image_id << ",\"proposal_id\":" << t.proposal_id
        << ",\"category_id\":" << t.class_id << ",\"bbox\":[" << detail::fmt6(t.box.x) << ","
        << detail::fmt6(t.box.y) << "," << detail::fmt6(t.box.w) << "," << detail::fmt6(t.box.h)
        << "],\"score\":" << detail::fmt6(t.score) << "}" << (i + 1 < tuples.size() ? "," : "")
        << "\n";
  }
  out << "]\n";
}

inline std::vector<DetectionTuple> load_results(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  const json doc = detail::parse_document(in, path);
  if (!doc.is_array()) throw ValidationError(path + ": results must be an array");
  std::vector<DetectionTuple> tuples;
  std::map<long, long> next_proposal;  // per-image file order when proposal_id is absent
  for (size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "[" + std::to_string(i) + "]";
    const json& r = doc[i];
    DetectionTuple t;
    t.image_id = static_cast<long>(detail::number_at(r, "image_id", where));
    t.class_id = static_cast<int>(detail::number_at(r, "category_id", where));
    t.box = detail::box_from(detail::field(r, "bbox", where), where + ".bbox");
    t.score = detail::number_at(r, "score", where);
    if (!std::isfinite(t.score) || t.score < 0.0)
      throw ValidationError(where + ".score: must be finite and >= 0");
    t.proposal_id = r.contains("proposal_id") && r["proposal_id"].is_number()
                        ? static_cast<long>(r["proposal_id"].get<double>())
                        : next_proposal[t.image_id]++;
    tuples.push_back(t);
  }
  return tuples;
}

// ---------------------------------------------------------------------------
// Metric reports

enum class ReportFormat { structured, csv };

using Meta = std::map<std::string, std::string>;

inline json metrics_to_json(const eval::MetricsReport& r, const ClassTable& table) {
  json doc;
  doc["metrics"] = {{"ap", detail::opt6(r.ap_overall)},
                    {"ap_rare", detail::opt6(r.ap_rare)},
                    {"ap_common", detail::opt6(r.ap_common)},
                    {"ap_frequent", detail::opt6(r.ap_frequent)},
                    {"ar", detail::opt6(r.ar_overall)},
                    {"ar_rare", detail::opt6(r.ar_rare)},
                    {"ar_common", detail::opt6(r.ar_common)},
                    {"ar_frequent", detail::opt6(r.ar_frequent)}};
  doc["per_class"] = json::array();
  for (const auto& [class_id, pc] : r.per_class) {
    json row = {{"class_id", class_id},
                {"ap", detail::opt6(pc.ap)},
                {"ar", detail::opt6(pc.ar)},
                {"n_gt", pc.n_gt},
                {"n_det", pc.n_det}};
    if (table.contains(class_id)) {
      row["name"] = table.entries()[table.index_of(class_id)].name;
      row["bucket"] = to_string(table.bucket(class_id));
    }
    doc["per_class"].push_back(std::move(row));
  }
  return doc;
}

namespace detail {

inline std::string csv_opt(const std::optional<double>& v) { return v ? fmt6(*v) : ""; }

inline void write_meta_comments(std::ofstream& out, const Meta& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
}

}  // namespace detail

inline void write_report(const eval::MetricsReport& r, const ClassTable& table,
                         const std::string& path, ReportFormat format, const Meta& meta = {}) {
  std::ofstream out = detail::open_out(path);
  if (format == ReportFormat::structured) {
    json doc = metrics_to_json(r, table);
    if (!meta.empty()) doc["meta"] = meta;
    out << doc.dump(2) << "\n";
    return;
  }
  detail::write_meta_comments(out, meta);
  out << "scope,class_id,name,bucket,ap,ar,n_gt,n_det\n";
  for (const auto& [class_id, pc] : r.per_class) {
    const bool known = table.contains(class_id);
    out << "class," << class_id << ","
        << (known ? table.entries()[table.index_of(class_id)].name : "") << ","
        << (known ? to_string(table.bucket(class_id)) : "") << "," << detail::csv_opt(pc.ap)
        << "," << detail::csv_opt(pc.ar) << "," << pc.n_gt << "," << pc.n_det << "\n";
  }
  out << "bucket,,,rare," << detail::csv_opt(r.ap_rare) << "," << detail::csv_opt(r.ar_rare)
      << ",,\n";
  out << "bucket,,,common," << detail::csv_opt(r.ap_common) << "," << detail::csv_opt(r.ar_common)
      << ",,\n";
  out << "bucket,,,frequent," << detail::csv_opt(r.ap_frequent) << ","
      << detail::csv_opt(r.ar_frequent) << ",,\n";
  out << "overall,,,," << detail::csv_opt(r.ap_overall) << "," << detail::csv_opt(r.ar_overall)
      << ",,\n";
}

inline json sweep_to_json(const tune::SweepResult& sweep, const ClassTable& table) {
  json doc;
  doc["objective"] = sweep.objective.name();
  doc["best_gamma"] = detail::round6(sweep.best_gamma);
  doc["grid"] = json::array();
  for (double g : sweep.grid) doc["grid"].push_back(detail::round6(g));
  doc["curve"] = json::array();
  for (size_t i = 0; i < sweep.grid.size(); ++i) {
    const eval::MetricsReport& r = sweep.curve[i];
    doc["curve"].push_back({{"gamma", detail::round6(sweep.grid[i])},
                            {"objective_value", detail::round6(sweep.objective.value(r))},
                            {"ap", detail::opt6(r.ap_overall)},
                            {"ap_rare", detail::opt6(r.ap_rare)},
                            {"ap_common", detail::opt6(r.ap_common)},
                            {"ap_frequent", detail::opt6(r.ap_frequent)},
                            {"ar", detail::opt6(r.ar_overall)},
                            {"ar_rare", detail::opt6(r.ar_rare)},
                            {"ar_common", detail::opt6(r.ar_common)},
                            {"ar_frequent", detail::opt6(r.ar_frequent)}});
  }
  doc["best_report"] = metrics_to_json(sweep.best_report(), table);
  return doc;
}

inline void write_report(const tune::SweepResult& sweep, const ClassTable& table,
                         const std::string& path, ReportFormat format, const Meta& meta = {}) {
  std::ofstream out = detail::open_out(path);
  if (format == ReportFormat::structured) {
    json doc = sweep_to_json(sweep, table);
    if (!meta.empty()) doc["meta"] = meta;
    out << doc.dump(2) << "\n";
    return;
  }
  detail::write_meta_comments(out, meta);
  out << "# objective=" << sweep.objective.name() << "\n";
  out << "# best_gamma=" << detail::fmt6(sweep.best_gamma) << "\n";
  out << "gamma,objective_value,ap,ap_rare,ap_common,ap_frequent,ar,ar_rare,ar_common,ar_frequent\n";
  for (size_t i = 0; i < sweep.grid.size(); ++i) {
    const eval::MetricsReport& r = sweep.curve[i];
    out << detail::fmt6(sweep.grid[i]) << "," << detail::fmt6(sweep.objective.value(r)) << ","
        << detail::csv_opt(r.ap_overall) << "," << detail::csv_opt(r.ap_rare) << ","
        << detail::csv_opt(r.ap_common) << "," << detail::csv_opt(r.ap_frequent) << ","
        << detail::csv_opt(r.ar_overall) << "," << detail::csv_opt(r.ar_rare) << ","
        << detail::csv_opt(r.ar_common) << "," << detail::csv_opt(r.ar_frequent) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Synthetic scenario parameters

inline synth::SynthParams load_synth_params(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  const json doc = detail::parse_document(in, path);
  synth::SynthParams p;
  auto get_num = [&](const char* key, double fallback) {
    return doc.contains(key) ? detail::number_at(doc, key, path) : fallback;
  };
  p.n_classes = static_cast<int>(get_num("n_classes", p.n_classes));
  p.n_images = static_cast<int>(get_num("n_images", p.n_images));
  p.head_bias = get_num("head_bias", p.head_bias);
  p.localization_noise = get_num("localization_noise", p.localization_noise);
  p.fg_bg_margin = get_num("fg_bg_margin", p.fg_bg_margin);
  p.seed = static_cast<uint64_t>(get_num("seed", 0));
  p.logit_noise = get_num("logit_noise", p.logit_noise);
  p.true_class_margin = get_num("true_class_margin", p.true_class_margin);
  p.background_per_image = static_cast<int>(get_num("background_per_image", p.background_per_image));
  p.eval_class_skew = get_num("eval_class_skew", p.eval_class_skew);
  p.image_width = static_cast<int>(get_num("image_width", p.image_width));
  p.image_height = static_cast<int>(get_num("image_height", p.image_height));
  if (doc.contains("objects_per_image")) {
    const json& o = doc["objects_per_image"];
    p.objects_per_image.min_objects =
        static_cast<int>(detail::number_at(o, "min", "objects_per_image"));
    p.objects_per_image.max_objects =
        static_cast<int>(detail::number_at(o, "max", "objects_per_image"));
  }
  if (doc.contains("frequency_law")) {
    const json& f = doc["frequency_law"];
    const std::string kind = detail::field(f, "kind", "frequency_law").get<std::string>();
    if (kind == "zipf") {
      p.frequency_law = synth::FrequencyLaw::zipf(
          detail::number_at(f, "exponent", "frequency_law"),
          f.contains("max_count")
              ? static_cast<long>(detail::number_at(f, "max_count", "frequency_law"))
              : 1000);
    } else if (kind == "explicit") {
      const json& counts = detail::field(f, "counts", "frequency_law");
      std::vector<long> c;
      for (const json& v : counts) c.push_back(static_cast<long>(v.get<double>()));
      p.frequency_law = synth::FrequencyLaw::explicit_counts(std::move(c));
    } else {
      throw ValidationError(path + ": frequency_law.kind must be 'zipf' or 'explicit'");
    }
  }
  p.validate();
  return p;
}

// Score-bias statistics as JSON (used by the analyze subcommand).
inline json score_stats_to_json(const eval::ScoreStatistics& s) {
  return json{{"bucket_means",
               {{"rare", detail::opt6(s.mean_rare)},
                {"common", detail::opt6(s.mean_common)},
                {"frequent", detail::opt6(s.mean_frequent)},
                {"normalized", s.normalized},
                {"n_rare", s.n_rare},
                {"n_common", s.n_common},
                {"n_frequent", s.n_frequent}}},
              {"rare_proposals",
               {{"mean_own", detail::opt6(s.rare_mean_own)},
                {"mean_other_rare", detail::opt6(s.rare_mean_other_rare)},
                {"mean_best_common", detail::opt6(s.rare_mean_best_common)},
                {"mean_best_frequent", detail::opt6(s.rare_mean_best_frequent)},
                {"n_rare_tuples", s.n_rare_tuples}}}};
}

}  // namespace norcal::io
