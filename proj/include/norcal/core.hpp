#pragma once

// Domain types shared by all modules: class-frequency bookkeeping, boxes,
// proposals, calibration configuration, detection tuples and ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace norcal {

// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 1 (invalid flags / configuration values)
//   ValidationError -> 2 (input data fails validation)
//   InternalError -> 3 (broken internal invariant)
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

// Non-fatal diagnostics (unseen classes, discouraged config combinations)
// go through a swappable handler so tests can capture them.
inline std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler =
      [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
  return handler;
}

inline void warn(const std::string& msg) { warning_handler()(msg); }

enum class Bucket { rare, common, frequent, unseen };

inline const char* to_string(Bucket b) {
  switch (b) {
    case Bucket::rare: return "rare";
    case Bucket::common: return "common";
    case Bucket::frequent: return "frequent";
    case Bucket::unseen: return "unseen";
  }
  return "unseen";
}

// Axis-aligned box, top-left corner + size, pixel units.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h) && w >= 0.0 && h >= 0.0;
  }
};

inline bool operator==(const Box& a, const Box& b) {
  return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
}

// Frequency-bucket boundaries over per-class training-image counts.
// LVIS convention: rare 1..10, common 11..100, frequent >100.
struct BucketThresholds {
  long rare_max = 10;
  long common_max = 100;

  void validate() const {
    if (rare_max < 1 || common_max <= rare_max)
      throw ConfigError("bucket thresholds must satisfy 1 <= rare_max < common_max");
  }
};

struct ClassEntry {
  int class_id = 0;
  std::string name;
  long n_images = 0;  // number of training images containing the class
};

// Per-class training-image counts plus a stable class_id -> position map
// used to index logit vectors.
class ClassTable {
 public:
  ClassTable() = default;

  ClassTable(std::vector<ClassEntry> entries, BucketThresholds thresholds = {})
      : entries_(std::move(entries)), thresholds_(thresholds) {
    thresholds_.validate();
    std::sort(entries_.begin(), entries_.end(),
              [](const ClassEntry& a, const ClassEntry& b) { return a.class_id < b.class_id; });
    index_.reserve(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i) {
      const ClassEntry& e = entries_[i];
      if (e.n_images < 0)
        throw ValidationError("class " + std::to_string(e.class_id) + ": negative n_images");
      if (!index_.emplace(e.class_id, i).second)
        throw ValidationError("duplicate class_id " + std::to_string(e.class_id));
    }
  }

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<ClassEntry>& entries() const { return entries_; }
  const BucketThresholds& thresholds() const { return thresholds_; }

  bool contains(int class_id) const { return index_.count(class_id) != 0; }

  // Position of class_id in the foreground slot order (ascending class_id).
  size_t index_of(int class_id) const {
    auto it = index_.find(class_id);
    if (it == index_.end())
      throw ValidationError("unknown class_id " + std::to_string(class_id));
    return it->second;
  }

  int class_id_at(size_t index) const {
    if (index >= entries_.size())
      throw InternalError("class index out of range");
    return entries_[index].class_id;
  }

  long n_images(int class_id) const { return entries_[index_of(class_id)].n_images; }

  Bucket bucket(int class_id) const {
    const long n = n_images(class_id);
    if (n == 0) return Bucket::unseen;
    if (n <= thresholds_.rare_max) return Bucket::rare;
    if (n <= thresholds_.common_max) return Bucket::common;
    return Bucket::frequent;
  }

 private:
  std::vector<ClassEntry> entries_;  // sorted by class_id
  std::unordered_map<int, size_t> index_;
  BucketThresholds thresholds_;
};

enum class ClassifierKind { softmax_bg, multi_binary };
enum class Mechanism { divide_exponential, divide_probability, scale_logit };
enum class FactorKind { cdt, ens, custom, none };

inline const char* to_string(ClassifierKind k) {
  return k == ClassifierKind::softmax_bg ? "softmax_bg" : "multi_binary";
}

inline const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::divide_exponential: return "divide_exponential";
    case Mechanism::divide_probability: return "divide_probability";
    case Mechanism::scale_logit: return "scale_logit";
  }
  return "divide_exponential";
}

inline const char* to_string(FactorKind f) {
  switch (f) {
    case FactorKind::cdt: return "cdt";
    case FactorKind::ens: return "ens";
    case FactorKind::custom: return "custom";
    case FactorKind::none: return "none";
  }
  return "none";
}

// Which per-class factor family to use and its hyper-parameter.
struct FactorSpec {
  FactorKind kind = FactorKind::none;
  double gamma = 0.0;  // cdt: gamma >= 0; ens: 0 <= gamma < 1
  std::string path;    // custom: file of (class_id, factor) pairs

  static FactorSpec cdt(double gamma) { return {FactorKind::cdt, gamma, {}}; }
  static FactorSpec ens(double gamma) { return {FactorKind::ens, gamma, {}}; }
  static FactorSpec custom(std::string path) { return {FactorKind::custom, 0.0, std::move(path)}; }
  static FactorSpec none() { return {FactorKind::none, 0.0, {}}; }
};

struct CalibrationConfig {
  ClassifierKind classifier_kind = ClassifierKind::softmax_bg;
  Mechanism mechanism = Mechanism::divide_exponential;
  FactorSpec factor = FactorSpec::none();
  bool normalize = true;
  double beta = 1.0;             // background multiplier, softmax kind only
  double score_threshold = 1e-4;

  void validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw ConfigError("beta must be a finite non-negative value");
    if (!std::isfinite(score_threshold))
      throw ConfigError("score_threshold must be finite");
    switch (factor.kind) {
      case FactorKind::cdt:
        if (!(factor.gamma >= 0.0) || !std::isfinite(factor.gamma))
          throw ConfigError("cdt requires gamma >= 0");
        break;
      case FactorKind::ens:
        if (!(factor.gamma >= 0.0) || factor.gamma >= 1.0)
          throw ConfigError("ens requires 0 <= gamma < 1");
        break;
      case FactorKind::custom:
        if (factor.path.empty())
          throw ConfigError("custom factor requires a path");
        break;
      case FactorKind::none:
        break;
    }
    if (classifier_kind == ClassifierKind::multi_binary) {
      if (normalize)
        warn("score normalization with multi_binary classifiers has no background "
             "logit to anchor it and is known to degrade results");
      if (beta != 1.0)
        warn("beta has no effect with multi_binary classifiers");
    }
  }
};

// One proposal's raw logit vector: length C+1 for softmax_bg models
// (last slot = background), length C for multi_binary models.
struct ProposalLogits {
  long image_id = 0;
  long proposal_id = 0;
  Box box;
  std::vector<double> logits;
};

// The (image, class, box, score) unit of evaluation. One proposal fans out
// into multiple tuples; proposal_id is retained for tie-breaking and the
// per-proposal score statistics.
struct DetectionTuple {
  long image_id = 0;
  long proposal_id = 0;
  int class_id = 0;
  Box box;
  double score = 0.0;
};

struct ImageInfo {
  long image_id = 0;
  double width = 0.0;
  double height = 0.0;
};

struct Annotation {
  long ann_id = 0;
  long image_id = 0;
  int class_id = 0;
  Box box;
  bool ignore = false;
};

struct CategoryInfo {
  int class_id = 0;
  std::string name;
};

// Annotation container (COCO-subset semantics). `categories` carries the
// class universe so unseen classes keep their logit slots.
struct GroundTruthSet {
  std::vector<ImageInfo> images;
  std::vector<Annotation> annotations;
  std::vector<CategoryInfo> categories;

  void validate() const {
    std::unordered_set<long> image_ids;
    for (const ImageInfo& im : images) {
      if (!image_ids.insert(im.image_id).second)
        throw ValidationError("duplicate image_id " + std::to_string(im.image_id));
    }
    std::unordered_set<int> class_ids;
    for (const CategoryInfo& c : categories) {
      if (!class_ids.insert(c.class_id).second)
        throw ValidationError("duplicate category id " + std::to_string(c.class_id));
    }
    std::unordered_set<long> ann_ids;
    std::set<long> dangling_images;
    for (const Annotation& a : annotations) {
      if (!ann_ids.insert(a.ann_id).second)
        throw ValidationError("duplicate ann_id " + std::to_string(a.ann_id));
      if (!a.box.valid())
        throw ValidationError("annotation " + std::to_string(a.ann_id) + ": invalid bbox");
      if (image_ids.count(a.image_id) == 0) dangling_images.insert(a.image_id);
      if (class_ids.count(a.class_id) == 0)
        throw ValidationError("annotation " + std::to_string(a.ann_id) +
                              " references unknown category " + std::to_string(a.class_id));
    }
    if (!dangling_images.empty()) {
      std::ostringstream oss;
      oss << "dangling image_id:";
      for (long id : dangling_images) oss << " " << id;
      throw ValidationError(oss.str());
    }
  }
};

// N_c = number of DISTINCT images holding at least one non-ignored annotation
// of class c. Classes listed in `categories` but absent from annotations get
// N_c = 0 and land in the unseen bucket.
inline ClassTable build_class_table(const GroundTruthSet& gt,
                                    BucketThresholds thresholds = {}) {
  thresholds.validate();
  if (gt.annotations.empty()) throw ValidationError("no annotations");
  gt.validate();

  std::map<int, std::unordered_set<long>> images_per_class;
  for (const CategoryInfo& c : gt.categories) images_per_class[c.class_id];
  for (const Annotation& a : gt.annotations) {
    if (a.ignore) continue;
    images_per_class[a.class_id].insert(a.image_id);
  }

  std::unordered_map<int, std::string> names;
  for (const CategoryInfo& c : gt.categories) names[c.class_id] = c.name;

  std::vector<ClassEntry> entries;
  entries.reserve(images_per_class.size());
  for (const auto& [class_id, images] : images_per_class) {
    entries.push_back({class_id, names[class_id], static_cast<long>(images.size())});
  }
  return ClassTable(std::move(entries), thresholds);
}

inline Bucket bucket_of(int class_id, const ClassTable& table) {
  return table.bucket(class_id);
}

}  // namespace norcal
