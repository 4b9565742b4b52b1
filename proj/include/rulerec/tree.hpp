#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulerec/core.hpp"

namespace rulerec {

struct TreeNode {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  // Internal nodes: x[feature] <= threshold routes left, otherwise right.
  std::size_t feature = kNone;
  double threshold = 0.0;
  std::size_t left = kNone;
  std::size_t right = kNone;
  // Leaves: predicted action and per-action weight totals reaching the leaf.
  Action action = 0;
  std::vector<double> weights;

  bool is_leaf() const { return feature == kNone; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary axis-aligned decision tree. Node 0 is the root; every leaf is one
// IF-THEN rule.
class RuleTree {
 public:
  RuleTree() = default;
  // Validates structure: children in range, one parent each, leaf actions
  // equal to the argmax of their weights.
  RuleTree(std::size_t dim, std::size_t n_actions, std::vector<TreeNode> nodes);

  std::size_t dim() const { return dim_; }
  std::size_t n_actions() const { return n_actions_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;

  Action predict(std::span<const double> x) const;
  // Index of the leaf x is routed to.
  std::size_t leaf_of(std::span<const double> x) const;
  Classifier as_classifier() const;

  std::string to_json() const;
  static RuleTree from_json(const std::string& text);

  friend bool operator==(const RuleTree&, const RuleTree&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<TreeNode> nodes_;
};

/// 1 - sum_a (w_a / W)^2; 0 when W = 0.
double weighted_gini(std::span<const double> class_weights);

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;  // W * gini(parent) - W_l * gini(left) - W_r * gini(right)
};

/// Exhaustive scan of midpoints between consecutive distinct values of each
/// feature over the positive-weight samples. Ties go to the lower feature,
/// then the smaller threshold. Empty when no split strictly decreases impurity.
std::optional<SplitCandidate> best_split(const WeightedSet& samples,
                                         double min_leaf_weight = 0.0);

struct TrainOptions {
  std::size_t max_leaves = 6;
  double min_leaf_weight = 0.0;
};

/// Best-first growth: repeatedly split the leaf whose best split has the
/// largest impurity decrease until max_leaves is reached or no leaf can be
/// split. Trees for increasing budgets are nested.
RuleTree train(const WeightedSet& samples, const TrainOptions& options);

/// One "IF ... THEN action k" line per leaf, left to right. Conditions on the
/// same feature along a path are merged into a single interval.
std::vector<std::string> extract_rules(const RuleTree& tree,
                                       const std::vector<std::string>& feature_names = {});

}  // namespace rulerec
