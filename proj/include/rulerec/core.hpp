#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rulerec {

using Action = std::size_t;

// Error hierarchy. The CLI maps every rulerec::Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidClassifier : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Dense row-major matrix of finite feature values, one row per customer.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim);
  FeatureMatrix(std::size_t rows, std::size_t dim, std::vector<double> values);
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) {
    return {values_.data() + i * dim_, dim_};
  }
  double at(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }

  void append(std::span<const double> row);
  FeatureMatrix select(std::span<const std::size_t> indices) const;

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

// One logged (features, action, outcome) triple.
struct HistoryRecord {
  std::vector<double> features;
  Action action = 0;
  int outcome = 0;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

// Checks record dimensions, action range and outcome domain.
void validate_records(std::span<const HistoryRecord> records,
                      std::size_t n_actions);
FeatureMatrix features_of(std::span<const HistoryRecord> records);

// N x |A| conversion probabilities. Every entry is checked to lie in [0, 1].
class ProbTable {
 public:
  ProbTable() = default;
  ProbTable(std::size_t rows, std::size_t actions, std::vector<double> p);
  static ProbTable from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t actions() const { return actions_; }
  std::span<const double> row(std::size_t n) const {
    return {p_.data() + n * actions_, actions_};
  }
  double at(std::size_t n, Action a) const { return p_[n * actions_ + a]; }
  const std::vector<double>& values() const { return p_; }

  ProbTable select(std::span<const std::size_t> indices) const;

  friend bool operator==(const ProbTable&, const ProbTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> p_;
};

struct RegretRow {
  std::vector<double> q;
  Action best = 0;
};

struct WeightedSample {
  std::vector<double> features;
  Action action = 0;
  double weight = 0.0;
};

// Struct-of-arrays form of a weighted sample list; what the tree trains on.
class WeightedSet {
 public:
  WeightedSet() = default;
  WeightedSet(std::size_t dim, std::size_t n_actions)
      : features_(0, dim), n_actions_(n_actions) {}

  // Throws InvalidInput on a negative or non-finite weight or an action
  // outside [0, n_actions).
  void add(std::span<const double> x, Action action, double weight);

  std::size_t size() const { return actions_.size(); }
  bool empty() const { return actions_.empty(); }
  std::size_t dim() const { return features_.dim(); }
  std::size_t n_actions() const { return n_actions_; }
  double total_weight() const;

  std::span<const double> features(std::size_t i) const { return features_.row(i); }
  Action action(std::size_t i) const { return actions_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  WeightedSample sample(std::size_t i) const;

  const FeatureMatrix& feature_matrix() const { return features_; }
  const std::vector<Action>& actions() const { return actions_; }
  const std::vector<double>& weights() const { return weights_; }

  friend bool operator==(const WeightedSet&, const WeightedSet&) = default;

 private:
  FeatureMatrix features_;
  std::size_t n_actions_ = 0;
  std::vector<Action> actions_;
  std::vector<double> weights_;
};

using Classifier = std::function<Action(std::span<const double>)>;

Classifier constant_policy(Action a);

/// Argmax of a probability row, lowest index on ties. Requires |A| >= 2 and
/// every entry finite in [0, 1].
Action optimal_action(std::span<const double> p_row);

/// q[a] = max(p) - p[a]; best = optimal_action(p).
RegretRow regret_row(std::span<const double> p_row);

/// Total regret sum_n [p(x_n, a*) - p(x_n, h(x_n))], summed in row order.
double loss_s(const Classifier& h, const ProbTable& probs,
              const FeatureMatrix& features);

/// Total weight of samples whose stored action differs from h's prediction.
double loss_t(const Classifier& h, const WeightedSet& weighted);

// Shared helper for classifier output validation.
Action checked_prediction(const Classifier& h, std::span<const double> x,
                          std::size_t n_actions);

}  // namespace rulerec
