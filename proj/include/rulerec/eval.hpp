#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rulerec/core.hpp"
#include "rulerec/prob_model.hpp"
#include "rulerec/random.hpp"
#include "rulerec/synth.hpp"
#include "rulerec/transform.hpp"
#include "rulerec/tree.hpp"

namespace rulerec {

/// Mean over rows of p(x_m, h(x_m)).
double conversion_rate(const Classifier& h, const ProbTable& probs,
                       const FeatureMatrix& features);

struct Bounds {
  double lower = 0.0;  // mean rowwise min: always the worst action
  double upper = 0.0;  // mean rowwise max: always the best action
};

Bounds bounds(const ProbTable& probs);

// Random tree (up to depth 4, thresholds taken from feature values) with
// uniformly random leaf actions.
RuleTree random_tree(const FeatureMatrix& features, std::size_t n_actions, Stream& rng);

// Half random trees, half random constant policies.
Classifier random_classifier(const FeatureMatrix& features, std::size_t n_actions,
                             Stream& rng);

struct IdentityReport {
  std::size_t trials = 0;
  std::size_t rows = 0;
  double k_scale = 0.0;
  double l_shift = 0.0;
  double max_deviation = 0.0;  // max |loss_T(h) - (K loss_S(h) + N L)|
  double tolerance = 0.0;      // 1e-9 * N
  bool passed = false;
};

/// Checks the exact affine relation between the weighted 0/1 loss on the
/// proposed set and the regret loss on the source rows, over random
/// classifiers. Always runs the transform in weights mode.
IdentityReport verify_loss_identity(const ProbTable& probs, const FeatureMatrix& features,
                                    const TransformConfig& cfg, std::size_t trials,
                                    std::uint64_t seed);

struct ExperimentCurve {
  std::string x_label;
  std::vector<double> x;
  std::vector<double> proposed;
  std::vector<double> benchmark;
  std::vector<double> upper;
  std::vector<double> lower;
  std::uint64_t seed = 0;
  std::string config;  // stable description of the run configuration
  std::vector<std::string> notes;

  std::string digest() const;
  // Comment header with seed and digest, then x,proposed,benchmark,upper,lower.
  std::string to_csv() const;
};

struct ExperimentCommon {
  SynthConfig synth;  // synth.seed is replaced by `seed`
  std::optional<double> k_scale;
  std::optional<double> l_shift;
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 0;
  bool estimated = false;  // fit logistic models instead of using ground truth
  FitOptions fit;
  unsigned threads = 0;
  std::size_t identity_trials = 20;
};

struct RuleCountConfig {
  ExperimentCommon common;
  std::vector<std::size_t> rule_counts{1, 2, 3, 4, 6, 8, 12, 16};
};

struct AlphaConfig {
  ExperimentCommon common;
  std::vector<double> alphas{0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 1.0};
  std::size_t rules = 6;
};

// Train/test data for one experiment run. Training probabilities are the
// ground truth, or model estimates in estimated mode; test probabilities are
// always the ground truth.
struct ExperimentData {
  FeatureMatrix train_features;
  ProbTable train_probs;
  FeatureMatrix test_features;
  ProbTable test_truth;
};

ExperimentData prepare_experiment(const ExperimentCommon& common);

ExperimentCurve experiment_rule_count(const RuleCountConfig& cfg);
ExperimentCurve experiment_alpha(const AlphaConfig& cfg);

}  // namespace rulerec
