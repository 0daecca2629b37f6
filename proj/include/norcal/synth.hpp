#pragma once

// Synthetic long-tailed scenario generation. Produces a ground-truth set, a
// training class table, and a logit dump whose scores carry a controllable
// head-class bias, so the calibration pipeline can be exercised end to end at
// desk scale.
//
// Logit model per foreground proposal with true class t:
//   phi_t  = true_class_margin + noise
//   phi_c  = head_bias * ln(max(N_c, 1)) + noise   for c != t
//   phi_bg = true_class_margin - fg_bg_margin + noise
// Background proposals flip the roles: phi_bg sits at the margin and every
// foreground class keeps only its bias term. Dividing exp(phi_c) by N_c^gamma
// subtracts gamma * ln N_c, so a CDT sweep counteracts the injected bias for
// gamma near head_bias.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "norcal/core.hpp"

namespace norcal::synth {

struct FrequencyLaw {
  enum class Kind { zipf, explicit_counts };
  Kind kind = Kind::zipf;
  double zipf_exponent = 1.0;  // N_c = max(1, round(zipf_max_count * rank^-s))
  long zipf_max_count = 1000;
  std::vector<long> counts;  // explicit_counts: one entry per class

  static FrequencyLaw zipf(double s, long max_count = 1000) {
    FrequencyLaw law;
    law.kind = Kind::zipf;
    law.zipf_exponent = s;
    law.zipf_max_count = max_count;
    return law;
  }
  static FrequencyLaw explicit_counts(std::vector<long> counts) {
    FrequencyLaw law;
    law.kind = Kind::explicit_counts;
    law.counts = std::move(counts);
    return law;
  }
};

struct ObjectsPerImage {
  int min_objects = 1;
  int max_objects = 8;
};

struct SynthParams {
  int n_classes = 20;
  FrequencyLaw frequency_law;
  int n_images = 100;
  ObjectsPerImage objects_per_image;
  double head_bias = 0.0;           // logit advantage per unit ln N_c
  double localization_noise = 0.0;  // box jitter sigma, px
  double fg_bg_margin = 4.0;        // foreground/background logit separation
  uint64_t seed = 0;

  double logit_noise = 1.0;        // sigma of the per-logit perturbation
  double true_class_margin = 4.0;  // expected true-class lead over competitors
  int background_per_image = 2;    // pure-background proposals per image
  double eval_class_skew = 0.0;    // GT classes sampled with weight N_c^skew
  int image_width = 640;
  int image_height = 480;

  void validate() const {
    if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
    if (n_images < 1) throw ConfigError("n_images must be >= 1");
    if (objects_per_image.min_objects < 0 ||
        objects_per_image.max_objects < objects_per_image.min_objects)
      throw ConfigError("objects_per_image range invalid");
    if (head_bias < 0.0 || localization_noise < 0.0 || logit_noise < 0.0)
      throw ConfigError("noise and bias parameters must be >= 0");
    if (background_per_image < 0) throw ConfigError("background_per_image must be >= 0");
    if (image_width < 32 || image_height < 32) throw ConfigError("image size too small");
    if (frequency_law.kind == FrequencyLaw::Kind::explicit_counts) {
      if (frequency_law.counts.size() != static_cast<size_t>(n_classes))
        throw ConfigError("explicit counts must have one entry per class");
      long nonzero = 0;
      for (long n : frequency_law.counts) {
        if (n < 0) throw ConfigError("explicit counts must be >= 0");
        if (n > 0) ++nonzero;
      }
      if (nonzero <= 1)
        throw ConfigError("degenerate frequency law: all mass on one class");
    } else {
      if (frequency_law.zipf_exponent < 0.0 || frequency_law.zipf_max_count < 1)
        throw ConfigError("zipf law requires exponent >= 0 and max_count >= 1");
    }
  }
};

struct Scenario {
  GroundTruthSet gt;         // the evaluation split
  GroundTruthSet train_gt;   // synthetic training annotations realizing the counts
  ClassTable train_table;
  std::vector<ProposalLogits> dump;
};

namespace detail {

inline std::vector<long> class_counts(const SynthParams& p) {
  if (p.frequency_law.kind == FrequencyLaw::Kind::explicit_counts)
    return p.frequency_law.counts;
  std::vector<long> counts(p.n_classes);
  for (int c = 0; c < p.n_classes; ++c) {
    const double rank = static_cast<double>(c + 1);
    counts[c] = std::max<long>(
        1, std::llround(static_cast<double>(p.frequency_law.zipf_max_count) *
                        std::pow(rank, -p.frequency_law.zipf_exponent)));
  }
  return counts;
}

}  // namespace detail

// Deterministic under seed: one sequential RNG drives everything.
inline Scenario gen_scenario(const SynthParams& p) {
  p.validate();
  const std::vector<long> counts = detail::class_counts(p);

  Scenario sc;
  std::vector<ClassEntry> entries(p.n_classes);
  for (int c = 0; c < p.n_classes; ++c)
    entries[c] = {c + 1, "class_" + std::to_string(c + 1), counts[c]};
  sc.train_table = ClassTable(entries);

  // Training annotations: class c appears in exactly N_c distinct images.
  long train_image_id = 0;
  long train_ann_id = 0;
  for (int c = 0; c < p.n_classes; ++c) {
    sc.train_gt.categories.push_back({c + 1, entries[c].name});
    for (long k = 0; k < counts[c]; ++k) {
      ++train_image_id;
      sc.train_gt.images.push_back({train_image_id, static_cast<double>(p.image_width),
                                    static_cast<double>(p.image_height)});
      sc.train_gt.annotations.push_back(
          {++train_ann_id, train_image_id, c + 1, Box{0, 0, 32, 32}, false});
    }
  }

  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<int> n_objects(p.objects_per_image.min_objects,
                                               p.objects_per_image.max_objects);
  std::uniform_int_distribution<int> box_size(20, 120);
  std::normal_distribution<double> logit_noise(0.0, 1.0);
  std::normal_distribution<double> loc_noise(0.0, 1.0);

  // GT class sampler, weight N_c^skew (skew 0 = uniform over classes).
  std::vector<double> weights(p.n_classes);
  for (int c = 0; c < p.n_classes; ++c)
    weights[c] = std::pow(static_cast<double>(std::max<long>(counts[c], 1)), p.eval_class_skew);
  std::discrete_distribution<int> class_dist(weights.begin(), weights.end());

  std::vector<double> bias(p.n_classes);
  for (int c = 0; c < p.n_classes; ++c)
    bias[c] = p.head_bias * std::log(static_cast<double>(std::max<long>(counts[c], 1)));

  sc.gt.categories = sc.train_gt.categories;
  long ann_id = 0;
  const int width = p.image_width, height = p.image_height;
  for (long img = 1; img <= p.n_images; ++img) {
    sc.gt.images.push_back({img, static_cast<double>(width), static_cast<double>(height)});
    long proposal_id = 0;
    const int objects = n_objects(rng);
    for (int obj = 0; obj < objects; ++obj) {
      const int cls = class_dist(rng);
      const int bw = box_size(rng);
      const int bh = box_size(rng);
      const int bx = std::uniform_int_distribution<int>(0, width - bw)(rng);
      const int by = std::uniform_int_distribution<int>(0, height - bh)(rng);
      const Box gt_box{static_cast<double>(bx), static_cast<double>(by),
                       static_cast<double>(bw), static_cast<double>(bh)};
      sc.gt.annotations.push_back({++ann_id, img, cls + 1, gt_box, false});

      // Proposal: jittered copy of the GT box on the integer grid.
      Box det = gt_box;
      if (p.localization_noise > 0.0) {
        det.x += std::round(loc_noise(rng) * p.localization_noise);
        det.y += std::round(loc_noise(rng) * p.localization_noise);
        det.w = std::max(4.0, det.w + std::round(loc_noise(rng) * p.localization_noise));
        det.h = std::max(4.0, det.h + std::round(loc_noise(rng) * p.localization_noise));
      }
      ProposalLogits proposal;
      proposal.image_id = img;
      proposal.proposal_id = proposal_id++;
      proposal.box = det;
      proposal.logits.resize(p.n_classes + 1);
      for (int c = 0; c < p.n_classes; ++c) {
        proposal.logits[c] = (c == cls ? p.true_class_margin : bias[c]) +
                             logit_noise(rng) * p.logit_noise;
      }
      proposal.logits[p.n_classes] =
          p.true_class_margin - p.fg_bg_margin + logit_noise(rng) * p.logit_noise;
      sc.dump.push_back(std::move(proposal));
    }
    for (int b = 0; b < p.background_per_image; ++b) {
      const int bw = box_size(rng);
      const int bh = box_size(rng);
      const int bx = std::uniform_int_distribution<int>(0, width - bw)(rng);
      const int by = std::uniform_int_distribution<int>(0, height - bh)(rng);
      ProposalLogits proposal;
      proposal.image_id = img;
      proposal.proposal_id = proposal_id++;
      proposal.box = Box{static_cast<double>(bx), static_cast<double>(by),
                         static_cast<double>(bw), static_cast<double>(bh)};
      proposal.logits.resize(p.n_classes + 1);
      for (int c = 0; c < p.n_classes; ++c)
        proposal.logits[c] = bias[c] + logit_noise(rng) * p.logit_noise;
      proposal.logits[p.n_classes] = p.true_class_margin + logit_noise(rng) * p.logit_noise;
      sc.dump.push_back(std::move(proposal));
    }
  }
  return sc;
}

}  // namespace norcal::synth
