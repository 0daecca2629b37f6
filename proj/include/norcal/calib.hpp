#pragma once

// Scoring and calibration math: softmax scores, foreground/background
// decomposition, CDT/ENS/custom per-class factors, the three calibration
// mechanisms with optional score normalization, and the sigmoid extension
// for detectors built from multiple binary classifiers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "norcal/core.hpp"

namespace norcal::calib {

// One positive divisor per foreground class, keyed by class_id. The
// background class never has an entry: its logit stays intact (scaled only
// by the explicit beta knob).
class FactorTable {
 public:
  FactorTable() = default;

  explicit FactorTable(std::map<int, double> factors) : factors_(std::move(factors)) {
    for (const auto& [class_id, a] : factors_) {
      if (!(a > 0.0) || !std::isfinite(a))
        throw ValidationError("factor for class " + std::to_string(class_id) +
                              " must be positive and finite");
    }
  }

  double at(int class_id) const {
    auto it = factors_.find(class_id);
    if (it == factors_.end())
      throw ValidationError("missing factor for class " + std::to_string(class_id));
    return it->second;
  }

  bool contains(int class_id) const { return factors_.count(class_id) != 0; }
  size_t size() const { return factors_.size(); }
  const std::map<int, double>& values() const { return factors_; }

  // Factors in logit-slot order. Throws listing every foreground class the
  // table does not cover.
  std::vector<double> aligned(const ClassTable& table) const {
    std::ostringstream missing;
    bool any = false;
    std::vector<double> out;
    out.reserve(table.size());
    for (const ClassEntry& e : table.entries()) {
      auto it = factors_.find(e.class_id);
      if (it == factors_.end()) {
        missing << (any ? " " : "") << e.class_id;
        any = true;
      } else {
        out.push_back(it->second);
      }
    }
    if (any) throw ValidationError("factor table missing classes: " + missing.str());
    return out;
  }

 private:
  std::map<int, double> factors_;
};

// Calibrated (or raw) per-class confidence scores for one proposal.
// `background` is present for softmax_bg models only.
struct ScoreVector {
  std::vector<double> foreground;
  std::optional<double> background;
};

namespace detail {

inline void require_finite_logits(const ProposalLogits& p) {
  for (double v : p.logits) {
    if (!std::isfinite(v))
      throw ValidationError("proposal image_id=" + std::to_string(p.image_id) +
                            " proposal_id=" + std::to_string(p.proposal_id) +
                            ": non-finite logit");
  }
}

inline void require_factor_width(const ProposalLogits& p, const std::vector<double>& a,
                                 size_t n_foreground) {
  if (a.size() != n_foreground)
    throw ValidationError("proposal image_id=" + std::to_string(p.image_id) +
                          " proposal_id=" + std::to_string(p.proposal_id) + ": " +
                          std::to_string(n_foreground) + " foreground classes but " +
                          std::to_string(a.size()) + " factors");
}

// exp(l_i - logsumexp(l)) for every entry; max-subtracted for stability.
inline std::vector<double> stable_softmax(const std::vector<double>& l) {
  const double m = *std::max_element(l.begin(), l.end());
  double denom = 0.0;
  std::vector<double> out(l.size());
  for (size_t i = 0; i < l.size(); ++i) {
    out[i] = std::exp(l[i] - m);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// Plain (C+1)-way softmax over foreground logits plus the background logit.
// Entries sum to 1.
inline ScoreVector softmax_scores(const ProposalLogits& p) {
  if (p.logits.size() < 2) throw ValidationError("softmax requires at least 2 logits");
  detail::require_finite_logits(p);
  std::vector<double> s = detail::stable_softmax(p.logits);
  ScoreVector out;
  out.background = s.back();
  s.pop_back();
  out.foreground = std::move(s);
  return out;
}

struct Decomposition {
  double p_foreground = 0.0;        // P(x is foreground vs background)
  std::vector<double> conditional;  // P(class c | foreground), length C
};

// Splits the softmax into foreground-vs-background times class-given-foreground.
// The product reconstructs the plain softmax foreground scores; the background
// logit appears only in the first term, so rescaling it never reorders the
// foreground classes.
inline Decomposition decompose_foreground(const ProposalLogits& p) {
  if (p.logits.size() < 2) throw ValidationError("decomposition requires at least 2 logits");
  detail::require_finite_logits(p);
  const size_t c = p.logits.size() - 1;
  const double m = *std::max_element(p.logits.begin(), p.logits.end());
  double fg_sum = 0.0;
  std::vector<double> e(c);
  for (size_t i = 0; i < c; ++i) {
    e[i] = std::exp(p.logits[i] - m);
    fg_sum += e[i];
  }
  const double bg = std::exp(p.logits[c] - m);
  Decomposition d;
  d.p_foreground = fg_sum / (fg_sum + bg);
  d.conditional.resize(c);
  for (size_t i = 0; i < c; ++i) d.conditional[i] = e[i] / fg_sum;
  return d;
}

// Class-dependent temperature: a_c = N_c^gamma. Unseen classes (N_c = 0)
// get the neutral factor 1 with a warning.
inline FactorTable factor_cdt(const ClassTable& table, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw ConfigError("cdt requires gamma >= 0");
  std::map<int, double> a;
  for (const ClassEntry& e : table.entries()) {
    if (e.n_images == 0) {
      warn("class " + std::to_string(e.class_id) + " has N_c = 0; using factor 1");
      a[e.class_id] = 1.0;
    } else {
      a[e.class_id] = std::pow(static_cast<double>(e.n_images), gamma);
    }
  }
  return FactorTable(std::move(a));
}

// Effective number of samples: a_c = (1 - gamma^{N_c}) / (1 - gamma),
// gamma in [0, 1). Unseen classes get factor 1.
inline FactorTable factor_ens(const ClassTable& table, double gamma) {
  if (!(gamma >= 0.0) || gamma >= 1.0)
    throw ConfigError("ens requires 0 <= gamma < 1");
  std::map<int, double> a;
  for (const ClassEntry& e : table.entries()) {
    if (e.n_images == 0) {
      warn("class " + std::to_string(e.class_id) + " has N_c = 0; using factor 1");
      a[e.class_id] = 1.0;
    } else if (gamma == 0.0) {
      a[e.class_id] = 1.0;
    } else {
      a[e.class_id] =
          (1.0 - std::pow(gamma, static_cast<double>(e.n_images))) / (1.0 - gamma);
    }
  }
  return FactorTable(std::move(a));
}

inline FactorTable unit_factors(const ClassTable& table) {
  std::map<int, double> a;
  for (const ClassEntry& e : table.entries()) a[e.class_id] = 1.0;
  return FactorTable(std::move(a));
}

// Builds the factor table a config asks for. Custom tables come from a file:
// load them through the io module and pass them in explicitly.
inline FactorTable make_factors(const ClassTable& table, const CalibrationConfig& cfg) {
  switch (cfg.factor.kind) {
    case FactorKind::cdt: return factor_cdt(table, cfg.factor.gamma);
    case FactorKind::ens: return factor_ens(table, cfg.factor.gamma);
    case FactorKind::none: return unit_factors(table);
    case FactorKind::custom:
      throw ConfigError("custom factor tables must be loaded from file and passed explicitly");
  }
  throw InternalError("unreachable factor kind");
}

// Calibrated scores for a softmax_bg proposal (logit length C+1, last = bg).
// `factors` is in logit-slot order (FactorTable::aligned).
//
// divide_exponential : numerator_c = exp(phi_c) / a_c, background = exp(phi_bg) * beta
// divide_probability : softmax probability s_c / a_c, background prob * beta
// scale_logit        : numerator_c = exp(phi_c / a_c), background as above
//
// With normalization everything is divided by (sum of foreground numerators +
// background term); at beta = 1 with divide_exponential this is the calibrated
// score definition. All exponentials go through max-subtracted log-domain
// arithmetic; dividing exp(phi_c) by a_c is evaluated as exp(phi_c - ln a_c).
inline ScoreVector calibrate_softmax(const ProposalLogits& p, const std::vector<double>& factors,
                                     const CalibrationConfig& cfg) {
  if (cfg.classifier_kind != ClassifierKind::softmax_bg)
    throw ConfigError("calibrate_softmax requires classifier_kind softmax_bg");
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) throw ConfigError("beta must be >= 0");
  if (p.logits.size() < 2) throw ValidationError("softmax_bg proposals need at least 2 logits");
  detail::require_finite_logits(p);

  const size_t c = p.logits.size() - 1;
  detail::require_factor_width(p, factors, c);
  const double phi_bg = p.logits[c];
  ScoreVector out;
  out.foreground.resize(c);

  if (cfg.mechanism == Mechanism::divide_probability) {
    std::vector<double> s = detail::stable_softmax(p.logits);
    double bg = s[c] * cfg.beta;
    double sum = bg;
    for (size_t i = 0; i < c; ++i) {
      out.foreground[i] = s[i] / factors[i];
      sum += out.foreground[i];
    }
    if (cfg.normalize) {
      for (double& v : out.foreground) v /= sum;
      bg /= sum;
    } else {
      bool clamped = false;
      for (double& v : out.foreground) {
        if (v > 1.0) {
          v = 1.0;
          clamped = true;
        }
      }
      if (clamped)
        warn("divide_probability without normalization produced scores > 1 "
             "(factor < 1); clamped to [0, 1]");
    }
    out.background = bg;
    return out;
  }

  // divide_exponential and scale_logit share the log-numerator formulation.
  std::vector<double> log_num(c);
  for (size_t i = 0; i < c; ++i) {
    log_num[i] = cfg.mechanism == Mechanism::scale_logit ? p.logits[i] / factors[i]
                                                         : p.logits[i] - std::log(factors[i]);
  }
  const bool has_bg = cfg.beta > 0.0;
  const double log_bg = has_bg ? phi_bg + std::log(cfg.beta)
                               : -std::numeric_limits<double>::infinity();

  if (cfg.normalize) {
    double m = has_bg ? log_bg : -std::numeric_limits<double>::infinity();
    for (double v : log_num) m = std::max(m, v);
    double denom = has_bg ? std::exp(log_bg - m) : 0.0;
    for (double v : log_num) denom += std::exp(v - m);
    for (size_t i = 0; i < c; ++i) out.foreground[i] = std::exp(log_num[i] - m) / denom;
    out.background = has_bg ? std::exp(log_bg - m) / denom : 0.0;
  } else {
    for (size_t i = 0; i < c; ++i) out.foreground[i] = std::exp(log_num[i]);
    out.background = has_bg ? std::exp(log_bg) : 0.0;
  }
  return out;
}

inline ScoreVector calibrate_softmax(const ProposalLogits& p, const FactorTable& f,
                                     const ClassTable& table, const CalibrationConfig& cfg) {
  return calibrate_softmax(p, f.aligned(table), cfg);
}

// Calibrated scores for a multi_binary proposal (logit length C, no background).
//
// divide_exponential : s_c = (exp(phi_c)/a_c) / (exp(phi_c)/a_c + 1)
//                      == sigmoid(phi_c - ln a_c)
// divide_probability : s_c = sigmoid(phi_c) / a_c (ranking score, clamped >= 0)
// scale_logit        : s_c = sigmoid(phi_c / a_c)
//
// Normalization (dividing by the foreground sum) is honored when requested but
// the config validator warns against it: without a background logit it boosts
// background patches.
inline ScoreVector calibrate_sigmoid(const ProposalLogits& p, const std::vector<double>& factors,
                                     const CalibrationConfig& cfg) {
  if (cfg.classifier_kind != ClassifierKind::multi_binary)
    throw ConfigError("calibrate_sigmoid requires classifier_kind multi_binary");
  if (p.logits.empty()) throw ValidationError("multi_binary proposals need at least 1 logit");
  detail::require_finite_logits(p);
  detail::require_factor_width(p, factors, p.logits.size());

  const size_t c = p.logits.size();
  ScoreVector out;
  out.foreground.resize(c);
  for (size_t i = 0; i < c; ++i) {
    const double a = factors[i];
    switch (cfg.mechanism) {
      case Mechanism::divide_exponential:
        out.foreground[i] = detail::stable_sigmoid(p.logits[i] - std::log(a));
        break;
      case Mechanism::divide_probability:
        out.foreground[i] = std::max(0.0, detail::stable_sigmoid(p.logits[i]) / a);
        break;
      case Mechanism::scale_logit:
        out.foreground[i] = detail::stable_sigmoid(p.logits[i] / a);
        break;
    }
  }
  if (cfg.normalize) {
    double sum = 0.0;
    for (double v : out.foreground) sum += v;
    if (sum > 0.0)
      for (double& v : out.foreground) v /= sum;
  }
  return out;
}

inline ScoreVector calibrate_sigmoid(const ProposalLogits& p, const FactorTable& f,
                                     const ClassTable& table, const CalibrationConfig& cfg) {
  return calibrate_sigmoid(p, f.aligned(table), cfg);
}

// Dispatch on the configured classifier kind.
inline ScoreVector calibrate_proposal(const ProposalLogits& p, const std::vector<double>& factors,
                                      const CalibrationConfig& cfg) {
  return cfg.classifier_kind == ClassifierKind::softmax_bg
             ? calibrate_softmax(p, factors, cfg)
             : calibrate_sigmoid(p, factors, cfg);
}

// Fans every proposal out into one tuple per foreground class whose calibrated
// score exceeds cfg.score_threshold. The background slot never emits a tuple.
// Output is sorted by (image_id, proposal_id, class_id) so downstream
// tie-breaking is reproducible.
inline std::vector<DetectionTuple> calibrate_dataset(const std::vector<ProposalLogits>& dump,
                                                     const ClassTable& table,
                                                     const FactorTable& factors,
                                                     const CalibrationConfig& cfg) {
  cfg.validate();
  const std::vector<double> aligned = factors.aligned(table);
  const size_t expected_width =
      table.size() + (cfg.classifier_kind == ClassifierKind::softmax_bg ? 1 : 0);
  std::vector<DetectionTuple> out;
  for (const ProposalLogits& p : dump) {
    if (p.logits.size() != expected_width)
      throw ValidationError("proposal image_id=" + std::to_string(p.image_id) +
                            " proposal_id=" + std::to_string(p.proposal_id) +
                            ": expected " + std::to_string(expected_width) + " logits, got " +
                            std::to_string(p.logits.size()));
    const ScoreVector s = calibrate_proposal(p, aligned, cfg);
    for (size_t i = 0; i < s.foreground.size(); ++i) {
      if (s.foreground[i] > cfg.score_threshold) {
        out.push_back({p.image_id, p.proposal_id, table.class_id_at(i), p.box, s.foreground[i]});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const DetectionTuple& a, const DetectionTuple& b) {
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    if (a.proposal_id != b.proposal_id) return a.proposal_id < b.proposal_id;
    return a.class_id < b.class_id;
  });
  return out;
}

inline std::vector<DetectionTuple> calibrate_dataset(const std::vector<ProposalLogits>& dump,
                                                     const ClassTable& table,
                                                     const CalibrationConfig& cfg) {
  return calibrate_dataset(dump, table, make_factors(table, cfg), cfg);
}

}  // namespace norcal::calib
